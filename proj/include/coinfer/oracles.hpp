#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "core_model.hpp"
#include "offline_solvers.hpp"

// Brute-force reference solvers for tests.  They re-derive costs from the
// model directly and search exhaustively, so they share no decision logic
// with the production solvers they check.

namespace coinfer {

struct StructuredOracle {
  double energy = kInf;
  std::vector<std::size_t> split;
  bool fallback = false;  // pipeline did not fit; everyone forced local
  bool feasible = false;
};

// Minimum total energy over every split vector in {0..N}^M against the
// back-to-back start times for batch size b.
inline StructuredOracle oracle_structured(const Scenario& sc, double deadline,
                                          std::size_t b) {
  const std::size_t M = sc.n_users();
  const std::size_t N = sc.profile.subtasks();
  const DnnProfile& p = sc.profile;
  StructuredOracle out;

  std::vector<double> s(N, 0.0);
  double t = deadline;
  for (std::size_t n = N; n >= 1; --n) {
    t -= edge_batch_latency(p, n, b);
    s[n - 1] = t;
  }
  out.fallback = s[0] < 0.0;

  // cost[m][n]: energy of user m splitting at n, or nullopt if it misses.
  auto split_cost = [&](std::size_t m, std::size_t n) -> std::optional<double> {
    const UserSpec& u = sc.users[m];
    if (n == N) {
      const double window = sc.deadline[m] - u.arrival;
      if (window <= 0.0) return std::nullopt;
      double f = p.total_work() / window;
      if (f > u.f_max * (1.0 + 1e-12)) return std::nullopt;
      f = std::min(std::max(f, u.f_min), u.f_max);
      return local_energy(u.kappa, p.total_work(), f);
    }
    if (out.fallback) return std::nullopt;
    if (n == 0) {
      if (u.arrival + p.data_bits[0] / u.rate_up > s[0]) return std::nullopt;
      return link_cost(p.data_bits[0], u.rate_up, u.power_up).energy;
    }
    double prefix = 0.0;
    for (std::size_t i = 0; i < n; ++i) prefix += p.work[i];
    const double window = s[n] - p.data_bits[n] / u.rate_up - u.arrival;
    if (window <= 0.0) return std::nullopt;
    double f = prefix / window;
    if (f > u.f_max) return std::nullopt;
    f = std::min(std::max(f, u.f_min), u.f_max);
    return local_energy(u.kappa, prefix, f) +
           link_cost(p.data_bits[n], u.rate_up, u.power_up).energy;
  };

  std::vector<std::vector<std::optional<double>>> cost(M);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n <= N; ++n) cost[m].push_back(split_cost(m, n));

  double combos = 1.0;
  for (std::size_t m = 0; m < M; ++m) combos *= double(N + 1);
  if (combos > 2e6)
    throw std::invalid_argument("oracle_structured: instance too large to enumerate");

  std::vector<std::size_t> pick(M, 0);
  while (true) {
    double e = 0.0;
    bool ok = true;
    for (std::size_t m = 0; m < M && ok; ++m) {
      if (!cost[m][pick[m]]) ok = false;
      else e += *cost[m][pick[m]];
    }
    if (ok && e < out.energy) {
      out.energy = e;
      out.split = pick;
      out.feasible = true;
    }
    std::size_t m = 0;
    while (m < M && pick[m] == N) pick[m++] = 0;
    if (m == M) break;
    ++pick[m];
  }
  return out;
}

struct GroupingOracle {
  double energy = kInf;
  std::vector<std::vector<std::size_t>> groups;  // original ids, by rising deadline
  bool feasible = false;
};

namespace detail {

// Orders groups by their common deadline, applies the spacing filter, and
// sums the batch-bound-search energy of each group.
inline std::optional<double> grouping_cost(
    const Scenario& sc, std::vector<std::vector<std::size_t>>& groups) {
  for (auto& g : groups)
    std::sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(sc.deadline[a], a) < std::tie(sc.deadline[b], b);
    });
  std::sort(groups.begin(), groups.end(),
            [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
              return std::tie(sc.deadline[a[0]], a[0]) <
                     std::tie(sc.deadline[b[0]], b[0]);
            });
  for (std::size_t k = 1; k < groups.size(); ++k)
    if (!groups_fit(sc.deadline[groups[k - 1][0]], sc.deadline[groups[k][0]],
                    sc.profile, groups[k].size()))
      return std::nullopt;
  double e = 0.0;
  for (const auto& g : groups) {
    const std::optional<SolveResult> r =
        try_ip_ssa(subscenario(sc, g), sc.deadline[g[0]]);
    if (!r) return std::nullopt;  // tightened deadline excludes a member
    e += r->energy;
  }
  return e;
}

}  // namespace detail

// Minimum energy over every set partition of the users (restricted growth
// string enumeration), each group served at its earliest member deadline.
inline GroupingOracle oracle_grouping(const Scenario& sc) {
  const std::size_t M = sc.n_users();
  if (M > 9)
    throw std::invalid_argument("oracle_grouping: instance too large to enumerate");
  GroupingOracle out;
  if (M == 0) {
    out.energy = 0.0;
    out.feasible = true;
    return out;
  }
  std::vector<std::size_t> label(M, 0);
  auto evaluate = [&]() {
    const std::size_t k = *std::max_element(label.begin(), label.end()) + 1;
    std::vector<std::vector<std::size_t>> groups(k);
    for (std::size_t m = 0; m < M; ++m) groups[label[m]].push_back(m);
    const std::optional<double> e = detail::grouping_cost(sc, groups);
    if (e && *e < out.energy) {
      out.energy = *e;
      out.groups = groups;
      out.feasible = true;
    }
  };
  auto recurse = [&](auto&& self, std::size_t m, std::size_t used) -> void {
    if (m == M) {
      evaluate();
      return;
    }
    for (std::size_t v = 0; v <= used; ++v) {
      label[m] = v;
      self(self, m + 1, std::max(used, v + 1));
    }
  };
  recurse(recurse, 0, 0);
  return out;
}

// Same search restricted to consecutive runs of the deadline-sorted order;
// every cut pattern of the sorted sequence is tried.
inline GroupingOracle oracle_grouping_contiguous(const Scenario& sc) {
  const std::size_t M = sc.n_users();
  if (M > 16)
    throw std::invalid_argument(
        "oracle_grouping_contiguous: instance too large to enumerate");
  GroupingOracle out;
  if (M == 0) {
    out.energy = 0.0;
    out.feasible = true;
    return out;
  }
  std::vector<std::size_t> order(M);
  for (std::size_t m = 0; m < M; ++m) order[m] = m;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(sc.deadline[a], a) < std::tie(sc.deadline[b], b);
  });

  for (std::size_t mask = 0; mask < (std::size_t(1) << (M - 1)); ++mask) {
    std::vector<std::vector<std::size_t>> groups;
    groups.emplace_back();
    for (std::size_t i = 0; i < M; ++i) {
      groups.back().push_back(order[i]);
      if (i + 1 < M && (mask >> i) & 1) groups.emplace_back();
    }
    bool ok = true;
    for (std::size_t k = 1; k < groups.size() && ok; ++k)
      ok = groups_fit(sc.deadline[groups[k - 1][0]], sc.deadline[groups[k][0]],
                      sc.profile, groups[k].size());
    if (!ok) continue;
    double e = 0.0;
    for (const auto& g : groups) {
      const std::optional<SolveResult> r =
          detail::try_ip_ssa(detail::subscenario(sc, g), sc.deadline[g[0]]);
      if (!r) {
        ok = false;
        break;
      }
      e += r->energy;
    }
    if (!ok) continue;
    if (e < out.energy) {
      out.energy = e;
      out.groups = groups;
      out.feasible = true;
    }
  }
  return out;
}

}  // namespace coinfer
