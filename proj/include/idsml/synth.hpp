#ifndef IDSML_SYNTH_HPP
#define IDSML_SYNTH_HPP

#include <cstdint>
#include <iosfwd>

#include "idsml/common.hpp"

namespace idsml::synth {

// Deterministic generator of connection records in the 41-field CSV format
// (labels carry the usual trailing period). Class mix and per-class feature
// signatures follow the familiar shape of the 10% intrusion corpus: heavy
// denial-of-service traffic, a fifth normal, and tiny U2Su/R2L populations.
// Used as the test and benchmark fixture when no real capture file is
// available.
struct SynthConfig {
  std::size_t rows = 49402;
  std::uint64_t seed = 424242;
};

void write_kdd_csv(std::ostream& out, const SynthConfig& cfg);

// Convenience: generate into a file, creating parent directories.
void write_kdd_file(const std::string& path, const SynthConfig& cfg);

}  // namespace idsml::synth

#endif  // IDSML_SYNTH_HPP
