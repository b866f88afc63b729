#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "coinfer/core_model.hpp"

namespace testutil {

// Two-stage pipeline used across suites.  Work units follow the A_n = F_n(1)
// convention; the latency table is flat in b so batch size never stretches
// the pipeline.
//
//   A = [0.01, 0.01], B = [1e6, 2e4, 0], F_n(b) = 0.01
//   kappa = 300, f_max = 1, R = 1e6 bit/s, p = 1 W, deadline 0.1 s
inline coinfer::Scenario two_stage(std::size_t users = 1, std::size_t b_max = 8) {
  coinfer::DnnProfile p;
  p.work = {0.01, 0.01};
  p.data_bits = {1e6, 2e4, 0.0};
  p.latency = {std::vector<double>(b_max, 0.01), std::vector<double>(b_max, 0.01)};

  coinfer::UserSpec u;
  u.f_min = 0.0;
  u.f_max = 1.0;
  u.kappa = 300.0;
  u.alpha = 1.0;
  u.rate_up = 1e6;
  u.rate_down = 1e6;
  u.power_up = 1.0;
  u.power_down = 1.0;

  coinfer::Scenario sc;
  sc.profile = p;
  sc.users.assign(users, u);
  sc.deadline.assign(users, 0.1);
  return sc;
}

// Random scenario with a synthetic monotone latency table.  growth = 0 makes
// the table flat in b.
inline coinfer::Scenario random_scenario(std::mt19937_64& rng, std::size_t users,
                                         std::size_t subtasks, double growth_max,
                                         bool equal_deadlines,
                                         double deadline_margin_max = 3.0) {
  std::uniform_real_distribution<double> base_d(0.002, 0.02);
  std::uniform_real_distribution<double> growth_d(0.0, growth_max);
  std::uniform_real_distribution<double> bits_d(1e4, 2e6);
  std::uniform_real_distribution<double> alpha_d(1.0, 4.0);
  std::uniform_real_distribution<double> rho_d(1.0, 150.0);
  std::uniform_real_distribution<double> rate_d(1e6, 2e7);
  std::uniform_real_distribution<double> margin_d(1.05, deadline_margin_max);

  const std::size_t b_max = users + 2;
  coinfer::DnnProfile p;
  for (std::size_t n = 0; n < subtasks; ++n) {
    const double base = base_d(rng);
    const double growth = growth_d(rng);
    std::vector<double> row;
    for (std::size_t b = 1; b <= b_max; ++b)
      row.push_back(base * (1.0 + growth * double(b - 1)));
    p.latency.push_back(row);
    p.work.push_back(base);
  }
  p.data_bits.push_back(bits_d(rng));
  for (std::size_t n = 0; n < subtasks; ++n) p.data_bits.push_back(bits_d(rng));
  p.data_bits.back() = 0.0;

  coinfer::Scenario sc;
  sc.profile = p;
  const coinfer::EdgeSpec edge;
  const double shared_margin = margin_d(rng);
  for (std::size_t m = 0; m < users; ++m) {
    coinfer::UserSpec u;
    u.alpha = alpha_d(rng);
    const auto cal = coinfer::calibrate_device(u.alpha, rho_d(rng), edge);
    u.f_max = cal.f_max;
    u.kappa = cal.kappa;
    u.rate_up = rate_d(rng);
    u.rate_down = u.rate_up;
    u.power_up = 1.0;
    u.power_down = 1.0;
    sc.users.push_back(u);
    const double local_floor = p.total_work() / u.f_max;
    const double margin = equal_deadlines ? shared_margin : margin_d(rng);
    sc.deadline.push_back(local_floor * margin);
  }
  if (equal_deadlines) {
    // Everyone must meet the common deadline locally, so take the loosest floor.
    double l = 0.0;
    for (std::size_t m = 0; m < users; ++m)
      l = std::max(l, p.total_work() / sc.users[m].f_max * 1.05);
    for (std::size_t m = 0; m < users; ++m)
      l = std::max(l, sc.deadline[m] * 0.0);  // keep vector shape explicit
    double shared = 0.0;
    for (std::size_t m = 0; m < users; ++m) shared = std::max(shared, sc.deadline[m]);
    shared = std::max(shared, l);
    sc.deadline.assign(users, shared);
  }
  return sc;
}

inline std::uint64_t mix_seed(std::uint64_t root, std::uint64_t salt) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace testutil
