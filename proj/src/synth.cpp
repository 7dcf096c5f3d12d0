#include "idsml/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

namespace idsml::synth {

namespace {

// Field indices in the 41-column layout.
enum : std::size_t {
  kDuration = 0, kProtocol = 1, kService = 2, kFlag = 3, kSrcBytes = 4,
  kDstBytes = 5, kLand = 6, kWrongFragment = 7, kUrgent = 8, kHot = 9,
  kFailedLogins = 10, kLoggedIn = 11, kCompromised = 12, kRootShell = 13,
  kSuAttempted = 14, kNumRoot = 15, kFileCreations = 16, kNumShells = 17,
  kAccessFiles = 18, kOutboundCmds = 19, kHostLogin = 20, kGuestLogin = 21,
  kCount = 22, kSrvCount = 23, kSerrorRate = 24, kSrvSerrorRate = 25,
  kRerrorRate = 26, kSrvRerrorRate = 27, kSameSrvRate = 28, kDiffSrvRate = 29,
  kSrvDiffHostRate = 30, kDstHostCount = 31, kDstHostSrvCount = 32,
  kDstHostSameSrvRate = 33, kDstHostDiffSrvRate = 34,
  kDstHostSameSrcPortRate = 35, kDstHostSrvDiffHostRate = 36,
  kDstHostSerrorRate = 37, kDstHostSrvSerrorRate = 38, kDstHostRerrorRate = 39,
  kDstHostSrvRerrorRate = 40,
};

struct Row {
  std::array<std::string, 41> f;
  std::string label;
};

std::string num(long v) { return std::to_string(v); }
std::string rate(double v) {
  return str_printf("%.2f", std::clamp(v, 0.0, 1.0));
}

long jitter_count(Rng& rng, long base, long spread) {
  const long v = base + static_cast<long>(rng.bounded(2 * spread + 1)) - spread;
  return std::max<long>(0, v);
}

const char* pick(Rng& rng, std::initializer_list<std::pair<const char*, double>> items) {
  double r = rng.u01();
  for (const auto& [name, p] : items) {
    if (r < p) return name;
    r -= p;
  }
  return items.begin()->first;
}

Row base_row(Rng& rng) {
  Row row;
  row.f.fill("0");
  row.f[kProtocol] = "tcp";
  row.f[kService] = "http";
  row.f[kFlag] = "SF";
  for (std::size_t i : {kSerrorRate, kSrvSerrorRate, kRerrorRate, kSrvRerrorRate,
                        kDiffSrvRate, kSrvDiffHostRate, kDstHostDiffSrvRate,
                        kDstHostSrvDiffHostRate, kDstHostSerrorRate,
                        kDstHostSrvSerrorRate, kDstHostRerrorRate,
                        kDstHostSrvRerrorRate, kDstHostSameSrcPortRate})
    row.f[i] = rate(std::abs(rng.gauss()) * 0.02);
  row.f[kSameSrvRate] = rate(1.0 - std::abs(rng.gauss()) * 0.05);
  row.f[kDstHostSameSrvRate] = rate(1.0 - std::abs(rng.gauss()) * 0.1);
  row.f[kDstHostCount] = num(jitter_count(rng, 150, 100));
  row.f[kDstHostSrvCount] = num(jitter_count(rng, 120, 100));
  return row;
}

Row make_normal(Rng& rng) {
  Row row = base_row(rng);
  row.label = "normal";
  row.f[kProtocol] = pick(rng, {{"tcp", 0.72}, {"udp", 0.23}, {"icmp", 0.05}});
  row.f[kService] = pick(rng, {{"http", 0.5},
                               {"smtp", 0.15},
                               {"domain_u", 0.15},
                               {"ftp_data", 0.1},
                               {"other", 0.1}});
  row.f[kFlag] = pick(rng, {{"SF", 0.96}, {"REJ", 0.04}});
  row.f[kDuration] = num(rng.u01() < 0.6 ? 0 : jitter_count(rng, 15, 15));
  row.f[kSrcBytes] = num(static_cast<long>(std::exp(rng.gauss() * 1.0 + 5.3)));
  row.f[kDstBytes] = num(static_cast<long>(std::exp(rng.gauss() * 1.4 + 5.8)));
  row.f[kLoggedIn] = rng.u01() < 0.7 ? "1" : "0";
  row.f[kCount] = num(jitter_count(rng, 8, 7));
  row.f[kSrvCount] = num(jitter_count(rng, 8, 7));
  return row;
}

Row make_dos(Rng& rng) {
  Row row = base_row(rng);
  const double r = rng.u01();
  if (r < 0.717) {
    row.label = "smurf";
    row.f[kProtocol] = "icmp";
    row.f[kService] = "ecr_i";
    row.f[kSrcBytes] = pick(rng, {{"1032", 0.9}, {"520", 0.05}, {"508", 0.05}});
    row.f[kCount] = num(jitter_count(rng, 440, 70));
    row.f[kSrvCount] = row.f[kCount];
    row.f[kSameSrvRate] = rate(1.0);
    row.f[kDstHostCount] = "255";
    row.f[kDstHostSrvCount] = "255";
    row.f[kDstHostSameSrvRate] = rate(1.0);
    row.f[kDstHostSameSrcPortRate] = rate(1.0 - std::abs(rng.gauss()) * 0.05);
  } else if (r < 0.991) {
    row.label = "neptune";
    row.f[kService] = pick(rng, {{"private", 0.8}, {"telnet", 0.1}, {"finger", 0.1}});
    row.f[kFlag] = pick(rng, {{"S0", 0.95}, {"REJ", 0.05}});
    row.f[kCount] = num(jitter_count(rng, 200, 110));
    row.f[kSrvCount] = num(jitter_count(rng, 12, 8));
    row.f[kSerrorRate] = rate(1.0 - std::abs(rng.gauss()) * 0.02);
    row.f[kSrvSerrorRate] = rate(1.0 - std::abs(rng.gauss()) * 0.02);
    row.f[kDstHostSerrorRate] = rate(1.0 - std::abs(rng.gauss()) * 0.02);
    row.f[kDstHostSrvSerrorRate] = rate(1.0 - std::abs(rng.gauss()) * 0.02);
    row.f[kSameSrvRate] = rate(0.06 + std::abs(rng.gauss()) * 0.03);
    row.f[kDiffSrvRate] = rate(0.06 + std::abs(rng.gauss()) * 0.03);
    row.f[kDstHostCount] = "255";
  } else if (r < 0.997) {
    row.label = "back";
    row.f[kSrcBytes] = num(54540 + static_cast<long>(rng.bounded(100)));
    row.f[kDstBytes] = num(8314 + static_cast<long>(rng.bounded(100)));
    row.f[kHot] = "2";
    row.f[kLoggedIn] = "1";
    row.f[kCount] = num(jitter_count(rng, 6, 4));
  } else if (r < 0.9995) {
    row.label = "teardrop";
    row.f[kProtocol] = "udp";
    row.f[kService] = "private";
    row.f[kWrongFragment] = "3";
    row.f[kSrcBytes] = "28";
    row.f[kCount] = num(jitter_count(rng, 150, 60));
    row.f[kSrvCount] = row.f[kCount];
  } else {
    row.label = "land";
    row.f[kLand] = "1";
    row.f[kFlag] = "S0";
    row.f[kService] = "finger";
    row.f[kSerrorRate] = rate(1.0);
    row.f[kSrvSerrorRate] = rate(1.0);
  }
  return row;
}

Row make_probe(Rng& rng) {
  Row row = base_row(rng);
  const double r = rng.u01();
  row.f[kDiffSrvRate] = rate(0.7 + std::abs(rng.gauss()) * 0.15);
  row.f[kDstHostDiffSrvRate] = rate(0.6 + std::abs(rng.gauss()) * 0.2);
  row.f[kSameSrvRate] = rate(0.1 + std::abs(rng.gauss()) * 0.1);
  row.f[kDstHostSameSrvRate] = rate(0.05 + std::abs(rng.gauss()) * 0.05);
  row.f[kDstHostCount] = "255";
  row.f[kDstHostSrvCount] = num(jitter_count(rng, 12, 9));
  if (r < 0.387) {
    row.label = "satan";
    row.f[kService] = pick(rng, {{"private", 0.7}, {"other", 0.3}});
    row.f[kFlag] = pick(rng, {{"REJ", 0.6}, {"SF", 0.4}});
    row.f[kRerrorRate] = rate(0.8 + std::abs(rng.gauss()) * 0.1);
    row.f[kSrvRerrorRate] = rate(0.8 + std::abs(rng.gauss()) * 0.1);
    row.f[kCount] = num(jitter_count(rng, 120, 80));
  } else if (r < 0.691) {
    row.label = "ipsweep";
    row.f[kProtocol] = "icmp";
    row.f[kService] = "eco_i";
    row.f[kSrcBytes] = "8";
    row.f[kCount] = num(jitter_count(rng, 3, 2));
    row.f[kSrvDiffHostRate] = rate(0.5 + std::abs(rng.gauss()) * 0.2);
  } else if (r < 0.944) {
    row.label = "portsweep";
    row.f[kService] = "private";
    row.f[kFlag] = pick(rng, {{"S0", 0.5}, {"REJ", 0.5}});
    row.f[kDuration] = num(jitter_count(rng, 1000, 900));
    row.f[kSerrorRate] = rate(0.5 + std::abs(rng.gauss()) * 0.2);
    row.f[kCount] = num(jitter_count(rng, 10, 8));
  } else {
    row.label = "nmap";
    row.f[kProtocol] = pick(rng, {{"icmp", 0.5}, {"tcp", 0.5}});
    row.f[kService] = pick(rng, {{"eco_i", 0.5}, {"private", 0.5}});
    row.f[kCount] = num(jitter_count(rng, 2, 1));
  }
  return row;
}

Row make_u2r(Rng& rng) {
  Row row = base_row(rng);
  const double r = rng.u01();
  row.label = r < 0.58 ? "buffer_overflow"
              : r < 0.77 ? "rootkit"
              : r < 0.94 ? "loadmodule"
                         : "perl";
  row.f[kService] = pick(rng, {{"telnet", 0.7}, {"ftp", 0.2}, {"other", 0.1}});
  row.f[kDuration] = num(jitter_count(rng, 500, 450));
  row.f[kSrcBytes] = num(jitter_count(rng, 2000, 1500));
  row.f[kDstBytes] = num(jitter_count(rng, 15000, 12000));
  row.f[kLoggedIn] = "1";
  row.f[kHot] = num(jitter_count(rng, 12, 10));
  row.f[kRootShell] = rng.u01() < 0.8 ? "1" : "0";
  row.f[kNumRoot] = num(jitter_count(rng, 3, 2));
  row.f[kFileCreations] = num(jitter_count(rng, 2, 2));
  row.f[kNumShells] = num(rng.u01() < 0.5 ? 1 : 0);
  row.f[kCompromised] = num(jitter_count(rng, 1, 1));
  row.f[kCount] = "1";
  row.f[kSrvCount] = "1";
  return row;
}

Row make_r2l(Rng& rng) {
  Row row = base_row(rng);
  const double r = rng.u01();
  row.f[kCount] = num(jitter_count(rng, 2, 1));
  if (r < 0.89) {
    row.label = "warezclient";
    row.f[kService] = pick(rng, {{"ftp", 0.5}, {"ftp_data", 0.5}});
    row.f[kDuration] = num(jitter_count(rng, 300, 250));
    row.f[kSrcBytes] = num(jitter_count(rng, 1200, 900));
    row.f[kDstBytes] = num(jitter_count(rng, 300000, 200000));
    row.f[kLoggedIn] = "1";
    row.f[kGuestLogin] = "1";
    row.f[kHot] = num(jitter_count(rng, 2, 2));
  } else if (r < 0.937) {
    row.label = "guess_passwd";
    row.f[kService] = "telnet";
    row.f[kFlag] = pick(rng, {{"RSTO", 0.6}, {"SF", 0.4}});
    row.f[kFailedLogins] = num(1 + static_cast<long>(rng.bounded(5)));
    row.f[kDuration] = num(jitter_count(rng, 3, 2));
    row.f[kSrcBytes] = num(jitter_count(rng, 125, 40));
  } else if (r < 0.955) {
    row.label = "warezmaster";
    row.f[kService] = "ftp";
    row.f[kLoggedIn] = "1";
    row.f[kGuestLogin] = "1";
    row.f[kSrcBytes] = num(jitter_count(rng, 700, 300));
    row.f[kDstBytes] = num(jitter_count(rng, 4000, 3000));
  } else if (r < 0.965) {
    row.label = "imap";
    row.f[kService] = "imap4";
    row.f[kFlag] = pick(rng, {{"RSTO", 0.5}, {"SF", 0.5}});
    row.f[kDuration] = num(jitter_count(rng, 100, 80));
  } else if (r < 0.972) {
    row.label = "ftp_write";
    row.f[kService] = "ftp";
    row.f[kLoggedIn] = "1";
    row.f[kGuestLogin] = "1";
    row.f[kAccessFiles] = "1";
  } else if (r < 0.978) {
    row.label = "multihop";
    row.f[kService] = "telnet";
    row.f[kDuration] = num(jitter_count(rng, 800, 600));
    row.f[kLoggedIn] = "1";
  } else if (r < 0.99) {
    row.label = "phf";
    row.f[kService] = "http";
    row.f[kSrcBytes] = "51";
    row.f[kDstBytes] = "8127";
  } else {
    row.label = "spy";
    row.f[kService] = "telnet";
    row.f[kDuration] = num(jitter_count(rng, 400, 300));
    row.f[kLoggedIn] = "1";
  }
  return row;
}

}  // namespace

void write_kdd_csv(std::ostream& out, const SynthConfig& cfg) {
  if (cfg.rows < 100)
    throw ValidationError("synth: need at least 100 rows for a usable mix");
  Rng rng(cfg.seed);

  const std::size_t n_u2r = 52;
  const std::size_t n_r2l = std::max<std::size_t>(8, std::size_t(0.0022793 * double(cfg.rows)));
  const std::size_t n_normal = std::size_t(0.19691 * double(cfg.rows));
  const std::size_t n_probe = std::max<std::size_t>(8, std::size_t(0.008313 * double(cfg.rows)));
  const std::size_t n_dos = cfg.rows - n_normal - n_probe - n_u2r - n_r2l;

  std::vector<Row> rows;
  rows.reserve(cfg.rows);
  for (std::size_t i = 0; i < n_normal; ++i) rows.push_back(make_normal(rng));
  for (std::size_t i = 0; i < n_probe; ++i) rows.push_back(make_probe(rng));
  for (std::size_t i = 0; i < n_dos; ++i) rows.push_back(make_dos(rng));
  for (std::size_t i = 0; i < n_u2r; ++i) rows.push_back(make_u2r(rng));
  for (std::size_t i = 0; i < n_r2l; ++i) rows.push_back(make_r2l(rng));
  rng.shuffle(rows);

  for (const auto& row : rows) {
    for (const auto& f : row.f) out << f << ',';
    out << row.label << ".\n";
  }
}

void write_kdd_file(const std::string& path, const SynthConfig& cfg) {
  std::filesystem::create_directories(
      std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_kdd_csv(out, cfg);
  if (!out) throw IoError("short write: " + path);
}

}  // namespace idsml::synth
