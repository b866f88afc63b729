#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core_model.hpp"

namespace coinfer {

// Deadline assignment for generated scenarios: one shared value for the
// whole instance, or an independent uniform draw per user.
struct DeadlineSpec {
  enum class Kind { Fixed, Uniform };
  Kind kind = Kind::Fixed;
  double value = 0.25;
  double low = 0.25;
  double high = 1.0;

  static DeadlineSpec fixed(double l) {
    DeadlineSpec d;
    d.kind = Kind::Fixed;
    d.value = l;
    return d;
  }
  static DeadlineSpec uniform(double lo, double hi) {
    DeadlineSpec d;
    d.kind = Kind::Uniform;
    d.low = lo;
    d.high = hi;
    return d;
  }
};

// Cell geometry, radio parameters and device calibration inputs.  Defaults
// are the stock offline experiment values; device_efficiency 48.75 models a
// mobile GPU (0.3415 for the mobile CPU variant).
struct ScenarioConfig {
  std::size_t users = 15;
  double cell_radius = 100.0;        // m
  double bandwidth = 1e6;            // Hz
  double noise_dbm_hz = -174.0;      // noise power density
  double tx_power = 0.05;            // W, radiated; sets the SNR
  double uplink_power = 1.0;         // W, drawn by the transmitter circuitry
  double downlink_power = 1.0;
  double edge_power = 300.0;         // W
  double edge_efficiency = 48.75;    // work units per joule
  double device_efficiency = 48.75;
  double alpha = 1.0;                // local/edge latency ratio at full speed
  double shadow_sigma_db = 8.0;
  DeadlineSpec deadline;
  std::uint64_t seed = 1;

  double rho() const { return edge_efficiency / device_efficiency; }
  EdgeSpec edge() const { return {edge_power, edge_efficiency}; }

  void check() const {
    if (users == 0) throw std::invalid_argument("config: users must be positive");
    if (cell_radius <= 0.0 || bandwidth <= 0.0 || tx_power <= 0.0 ||
        uplink_power < 0.0 || downlink_power < 0.0 || edge_power <= 0.0 ||
        edge_efficiency <= 0.0 || device_efficiency <= 0.0 || alpha <= 0.0 ||
        shadow_sigma_db < 0.0)
      throw std::invalid_argument("config: physical quantities must be positive");
    if (deadline.kind == DeadlineSpec::Kind::Fixed) {
      if (deadline.value <= 0.0)
        throw std::invalid_argument("config: deadline must be positive");
    } else if (deadline.low <= 0.0 || deadline.high < deadline.low) {
      throw std::invalid_argument("config: bad deadline range");
    }
  }
};

// Shannon rate over the 3GPP-style macro path loss 128.1 + 37.6 log10(d_km)
// plus a shadowing term in dB.
inline double uplink_rate(const ScenarioConfig& cfg, double d_km, double shadow_db) {
  if (d_km <= 0.0) throw std::domain_error("uplink_rate: distance must be positive");
  const double path_loss_db = 128.1 + 37.6 * std::log10(d_km) + shadow_db;
  const double gain = std::pow(10.0, -path_loss_db / 10.0);
  const double noise_w_per_hz = std::pow(10.0, (cfg.noise_dbm_hz - 30.0) / 10.0);
  const double snr = cfg.tx_power * gain / (cfg.bandwidth * noise_w_per_hz);
  return cfg.bandwidth * std::log2(1.0 + snr);
}

// A generated instance keeps the user placement next to the solver-facing
// scenario so it can be serialized and inspected.
struct PlacedUser {
  double x = 0.0;  // m, edge antenna at the origin
  double y = 0.0;
};

struct GeneratedScenario {
  Scenario scenario;
  std::vector<PlacedUser> position;
  std::string profile_path;
  std::uint64_t seed = 0;
};

// Draws user positions uniformly in the disk, derives rates from the path
// loss with one shadowing sample per user, calibrates the devices, and
// assigns deadlines.  Deadlines below a user's all-local floor are invalid:
// fixed ones are rejected, uniform ones are redrawn.
inline GeneratedScenario sample_scenario(const ScenarioConfig& cfg,
                                         DnnProfile profile,
                                         std::mt19937_64& rng) {
  cfg.check();
  profile.check();
  if (profile.max_batch() < cfg.users)
    throw std::invalid_argument("sample_scenario: latency table shorter than user count");

  const DeviceCalibration cal = calibrate_device(cfg.alpha, cfg.rho(), cfg.edge());
  const double floor = profile.total_work() / cal.f_max;
  if (cfg.deadline.kind == DeadlineSpec::Kind::Fixed && cfg.deadline.value < floor)
    throw std::invalid_argument("sample_scenario: deadline below the all-local floor");
  if (cfg.deadline.kind == DeadlineSpec::Kind::Uniform && cfg.deadline.high < floor)
    throw std::invalid_argument("sample_scenario: deadline range below the all-local floor");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> shadow(0.0, cfg.shadow_sigma_db);

  GeneratedScenario out;
  out.seed = cfg.seed;
  out.scenario.profile = std::move(profile);
  for (std::size_t m = 0; m < cfg.users; ++m) {
    // Area-uniform radius; devices are kept at least a metre off the antenna.
    double r, theta;
    do {
      r = cfg.cell_radius * std::sqrt(unit(rng));
      theta = 2.0 * std::acos(-1.0) * unit(rng);
    } while (r < 1.0);
    const double sh = cfg.shadow_sigma_db > 0.0 ? shadow(rng) : 0.0;

    UserSpec u;
    u.f_min = 0.0;
    u.f_max = cal.f_max;
    u.kappa = cal.kappa;
    u.alpha = cfg.alpha;
    u.rate_up = uplink_rate(cfg, r / 1000.0, sh);
    u.rate_down = u.rate_up;
    u.power_up = cfg.uplink_power;
    u.power_down = cfg.downlink_power;
    u.arrival = 0.0;

    double l;
    if (cfg.deadline.kind == DeadlineSpec::Kind::Fixed) {
      l = cfg.deadline.value;
    } else {
      std::uniform_real_distribution<double> dl(cfg.deadline.low, cfg.deadline.high);
      int guard = 0;
      do {
        l = dl(rng);
        if (++guard > 100000)
          throw std::runtime_error("sample_scenario: cannot draw a feasible deadline");
      } while (l < floor);
    }

    out.scenario.users.push_back(u);
    out.scenario.deadline.push_back(l);
    out.position.push_back({r * std::cos(theta), r * std::sin(theta)});
  }
  out.scenario.check();
  return out;
}

inline GeneratedScenario sample_scenario(const ScenarioConfig& cfg, DnnProfile profile) {
  std::mt19937_64 rng(cfg.seed);
  return sample_scenario(cfg, std::move(profile), rng);
}

// Linear-in-batch latency family: F_n(b) = base_n * (1 + growth_n * (b - 1)).
// growth = 0 gives the constant-latency table.
inline DnnProfile synth_profile(const std::vector<double>& base,
                                const std::vector<double>& growth,
                                const std::vector<double>& bits,
                                std::size_t b_max) {
  const std::size_t N = base.size();
  if (N == 0 || growth.size() != N || bits.size() != N + 1 || b_max == 0)
    throw std::invalid_argument("synth_profile: inconsistent sizes");
  for (double g : growth)
    if (g < 0.0) throw std::invalid_argument("synth_profile: negative growth");

  DnnProfile p;
  p.work = base;
  p.data_bits = bits;
  for (std::size_t n = 0; n < N; ++n) {
    std::vector<double> row;
    for (std::size_t b = 1; b <= b_max; ++b)
      row.push_back(base[n] * (1.0 + growth[n] * double(b - 1)));
    p.latency.push_back(std::move(row));
  }
  p.check();
  return p;
}

// Built-in stand-ins for the two workload classes studied: a heavy detector
// whose batches keep costing more, and a light classifier whose batch
// latency is flat.
inline DnnProfile profile_heavy(std::size_t b_max = 15) {
  return synth_profile({0.030, 0.020, 0.015, 0.010}, {0.12, 0.12, 0.12, 0.12},
                       {2e6, 4e5, 3e5, 2e5, 1e5}, b_max);
}

inline DnnProfile profile_light(std::size_t b_max = 15) {
  return synth_profile({0.004, 0.003, 0.002, 0.001}, {0.0, 0.0, 0.0, 0.0},
                       {1.5e5, 8e4, 5e4, 3e4, 1e4}, b_max);
}

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("profile: malformed " + what + " '" + s + "'");
  }
}

}  // namespace detail

// Profile CSV: header `n,A,B_out,F1..Fb_max`, one row per sub-task plus a
// distinguished n=0 row that only carries the raw input size B_0.
inline void save_profile(const DnnProfile& p, const std::string& path) {
  p.check();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_profile: cannot open " + path);
  const std::size_t bmax = p.max_batch();
  out << "n,A,B_out";
  for (std::size_t b = 1; b <= bmax; ++b) out << ",F" << b;
  out << "\n0,0," << detail::fmt_g17(p.data_bits[0]);
  for (std::size_t b = 1; b <= bmax; ++b) out << ",0";
  out << "\n";
  for (std::size_t n = 1; n <= p.subtasks(); ++n) {
    out << n << "," << detail::fmt_g17(p.work[n - 1]) << ","
        << detail::fmt_g17(p.data_bits[n]);
    for (std::size_t b = 1; b <= bmax; ++b)
      out << "," << detail::fmt_g17(p.latency[n - 1][b - 1]);
    out << "\n";
  }
}

inline DnnProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_profile: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("profile: empty file");
  const std::vector<std::string> header = detail::split_csv_row(line);
  if (header.size() < 4 || header[0] != "n" || header[1] != "A" || header[2] != "B_out")
    throw std::invalid_argument("profile: bad header");
  const std::size_t bmax = header.size() - 3;

  struct Row {
    double work, bits;
    std::vector<double> lat;
  };
  bool have_input = false;
  double input_bits = 0.0;
  std::vector<std::pair<std::size_t, Row>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_row(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("profile: row width does not match header");
    const double n_val = detail::parse_double(cells[0], "sub-task index");
    const std::size_t n = std::size_t(n_val);
    if (double(n) != n_val) throw std::invalid_argument("profile: non-integer sub-task index");
    if (n == 0) {
      if (have_input) throw std::invalid_argument("profile: duplicate n=0 row");
      have_input = true;
      input_bits = detail::parse_double(cells[2], "B_out");
      continue;
    }
    Row r;
    r.work = detail::parse_double(cells[1], "A");
    r.bits = detail::parse_double(cells[2], "B_out");
    for (std::size_t b = 0; b < bmax; ++b)
      r.lat.push_back(detail::parse_double(cells[3 + b], "F"));
    for (std::size_t b = 1; b < bmax; ++b)
      if (r.lat[b] < r.lat[b - 1])
        throw std::invalid_argument("profile: F must be nondecreasing in the batch size");
    rows.emplace_back(n, std::move(r));
  }
  if (!have_input) throw std::invalid_argument("profile: missing n=0 input row");
  if (rows.empty()) throw std::invalid_argument("profile: no sub-task rows");

  DnnProfile p;
  p.data_bits.push_back(input_bits);
  for (std::size_t n = 1; n <= rows.size(); ++n) {
    bool found = false;
    for (const auto& [idx, r] : rows) {
      if (idx != n) continue;
      if (found) throw std::invalid_argument("profile: duplicate sub-task row");
      p.work.push_back(r.work);
      p.data_bits.push_back(r.bits);
      p.latency.push_back(r.lat);
      found = true;
    }
    if (!found) throw std::invalid_argument("profile: sub-task rows must cover 1..N");
  }
  p.check();
  return p;
}

// Scenario JSON: placement, link and device parameters per user, the
// deadlines, the seed, and a pointer to the profile CSV.  Relative profile
// paths are resolved against the scenario file's directory on load.
inline void save_scenario(const GeneratedScenario& g, const std::string& path) {
  g.scenario.check();
  if (g.position.size() != g.scenario.n_users())
    throw std::invalid_argument("save_scenario: one position per user required");
  nlohmann::json j;
  j["seed"] = g.seed;
  j["profile_path"] = g.profile_path;
  j["deadline"] = g.scenario.deadline;
  j["users"] = nlohmann::json::array();
  for (std::size_t m = 0; m < g.scenario.n_users(); ++m) {
    const UserSpec& u = g.scenario.users[m];
    j["users"].push_back({{"x", g.position[m].x},
                          {"y", g.position[m].y},
                          {"f_min", u.f_min},
                          {"f_max", u.f_max},
                          {"kappa", u.kappa},
                          {"alpha", u.alpha},
                          {"rate_up", u.rate_up},
                          {"rate_down", u.rate_down},
                          {"power_up", u.power_up},
                          {"power_down", u.power_down},
                          {"arrival", u.arrival}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_scenario: cannot open " + path);
  out << j.dump(2) << "\n";
}

inline GeneratedScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_scenario: cannot open " + path);
  nlohmann::json j;
  in >> j;

  GeneratedScenario g;
  g.seed = j.at("seed").get<std::uint64_t>();
  g.profile_path = j.at("profile_path").get<std::string>();
  g.scenario.deadline = j.at("deadline").get<std::vector<double>>();
  for (const nlohmann::json& ju : j.at("users")) {
    UserSpec u;
    u.f_min = ju.at("f_min").get<double>();
    u.f_max = ju.at("f_max").get<double>();
    u.kappa = ju.at("kappa").get<double>();
    u.alpha = ju.at("alpha").get<double>();
    u.rate_up = ju.at("rate_up").get<double>();
    u.rate_down = ju.at("rate_down").get<double>();
    u.power_up = ju.at("power_up").get<double>();
    u.power_down = ju.at("power_down").get<double>();
    u.arrival = ju.at("arrival").get<double>();
    g.scenario.users.push_back(u);
    g.position.push_back({ju.at("x").get<double>(), ju.at("y").get<double>()});
  }

  std::filesystem::path pp(g.profile_path);
  if (pp.is_relative()) pp = std::filesystem::path(path).parent_path() / pp;
  g.scenario.profile = load_profile(pp.string());
  g.scenario.check();
  return g;
}

}  // namespace coinfer
