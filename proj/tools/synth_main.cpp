// Writes a synthetic 41-feature connection-record CSV, for exercising the
// pipeline when no real capture file is on hand.

#include <cstdlib>
#include <cstring>
#include <iostream>

#include "idsml/synth.hpp"

int main(int argc, char** argv) {
  idsml::synth::SynthConfig cfg;
  std::string out;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      out = argv[++i];
    } else if (std::strcmp(argv[i], "--rows") == 0 && i + 1 < argc) {
      cfg.rows = std::strtoull(argv[++i], nullptr, 10);
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      cfg.seed = std::strtoull(argv[++i], nullptr, 10);
    } else {
      std::cerr << "usage: kdd-synth --out FILE [--rows N] [--seed N]\n";
      return 3;
    }
  }
  if (out.empty()) {
    std::cerr << "usage: kdd-synth --out FILE [--rows N] [--seed N]\n";
    return 3;
  }
  try {
    idsml::synth::write_kdd_file(out, cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << cfg.rows << " records to " << out << "\n";
  return 0;
}
