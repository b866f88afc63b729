#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "core_model.hpp"
#include "schedule.hpp"

namespace coinfer {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Latest start times s*_n that let batches of size b run back to back and
// finish exactly at the deadline.  s[n-1] = s*_n; the pipeline occupies
// [s*_1, deadline].  Infeasible when the full pipeline does not fit.
struct BatchStartTimes {
  std::vector<double> s;
  bool feasible = false;
};

inline BatchStartTimes batch_start_times(const DnnProfile& p, double deadline,
                                         std::size_t b) {
  if (b == 0) throw std::invalid_argument("batch_start_times: b must be >= 1");
  const std::size_t N = p.subtasks();
  std::vector<double> s(N, 0.0);
  double t = deadline;
  for (std::size_t n = N; n >= 1; --n) {
    t -= edge_batch_latency(p, n, b);
    s[n - 1] = t;
  }
  const bool ok = s[0] >= 0.0;
  return {std::move(s), ok};
}

inline double sum_latency(const DnnProfile& p, std::size_t b) {
  double total = 0.0;
  for (std::size_t n = 1; n <= p.subtasks(); ++n)
    total += edge_batch_latency(p, n, b);
  return total;
}

// Split point decision for one user: sub-tasks 1..split run locally, the
// rest join the shared batches.  freq is NaN when nothing runs locally.
struct PartitionChoice {
  std::size_t split = 0;
  double freq = std::numeric_limits<double>::quiet_NaN();
  double energy = kInf;
  bool feasible = false;
};

namespace detail {

// All-local candidate; feasible whenever the device can make the deadline
// at f_max (tiny tolerance absorbs generator rounding).
inline PartitionChoice local_only_choice(const UserSpec& u, const DnnProfile& p,
                                         double deadline) {
  PartitionChoice c;
  c.split = p.subtasks();
  const double budget = deadline - u.arrival;
  if (budget <= 0.0) return c;
  const double work = p.total_work();
  const double f_req = work / budget;
  if (f_req > u.f_max * (1.0 + 1e-12)) return c;
  c.freq = std::min(std::max(f_req, u.f_min), u.f_max);
  c.energy = local_energy(u.kappa, work, c.freq);
  c.feasible = true;
  return c;
}

}  // namespace detail

// Minimum-energy split against fixed batch start times.  For split n the
// local prefix plus the upload of B_n must finish by s*_{n+1} (by the
// deadline for n = N); the slowest frequency that makes it is optimal, the
// quadratic energy being monotone.  Ties go to the larger split.
inline PartitionChoice best_partition(const UserSpec& u, const DnnProfile& p,
                                      const std::vector<double>& s, double deadline) {
  const std::size_t N = p.subtasks();
  if (s.size() != N)
    throw std::invalid_argument("best_partition: need one start time per sub-task");
  PartitionChoice best;

  if (u.arrival + p.data_bits[0] / u.rate_up <= s[0]) {
    best.split = 0;
    best.energy = link_cost(p.data_bits[0], u.rate_up, u.power_up).energy;
    best.feasible = true;
  }

  double prefix_work = 0.0;
  for (std::size_t n = 1; n <= N; ++n) {
    prefix_work += p.work[n - 1];
    PartitionChoice c;
    if (n == N) {
      c = detail::local_only_choice(u, p, deadline);
    } else {
      const double upload = p.data_bits[n] / u.rate_up;
      const double budget = s[n] - upload - u.arrival;
      if (budget <= 0.0) continue;
      const double f_req = prefix_work / budget;
      if (f_req > u.f_max) continue;
      c.split = n;
      c.freq = std::min(std::max(f_req, u.f_min), u.f_max);
      c.energy = local_energy(u.kappa, prefix_work, c.freq) +
                 link_cost(p.data_bits[n], u.rate_up, u.power_up).energy;
      c.feasible = true;
    }
    if (c.feasible && c.energy <= best.energy) best = c;
  }
  return best;
}

struct SolveResult {
  Schedule schedule;
  double energy = 0.0;
  std::vector<std::size_t> split;       // chosen split per user
  std::vector<std::size_t> batch_size;  // realized size per sub-task, index n-1
  bool pipeline_feasible = true;        // start-time recursion fit the deadline
  std::size_t batch_bound = 0;          // assumed b the plan was derived for
};

namespace detail {

// Single pass under one common batch deadline and an assumed batch size b:
// derive the latest start times, let every user pick its best split against
// them, then merge all offloaded copies of sub-task n into one batch at s*_n.
// The all-local option is judged against each user's own deadline, so a user
// whose deadline is looser than the batch deadline keeps a local way out.
// When the pipeline itself does not fit, every user runs fully local.
// nullopt when some user cannot meet the deadline at all.
inline std::optional<SolveResult> try_fixed_batch(const Scenario& sc, double deadline,
                                                  std::size_t b) {
  const std::size_t M = sc.n_users();
  const std::size_t N = sc.profile.subtasks();
  const BatchStartTimes bst = batch_start_times(sc.profile, deadline, b);

  SolveResult r;
  r.batch_bound = b;
  r.pipeline_feasible = bst.feasible;
  std::vector<PartitionChoice> choice(M);
  for (std::size_t m = 0; m < M; ++m) {
    choice[m] = bst.feasible
                    ? best_partition(sc.users[m], sc.profile, bst.s, sc.deadline[m])
                    : local_only_choice(sc.users[m], sc.profile, sc.deadline[m]);
    if (!choice[m].feasible) return std::nullopt;
    r.split.push_back(choice[m].split);
  }

  r.batch_size.assign(N, 0);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = choice[m].split + 1; n <= N; ++n) ++r.batch_size[n - 1];

  std::vector<std::size_t> batch_id(N, 0);
  Schedule& out = r.schedule;
  for (std::size_t n = 1; n <= N; ++n)
    if (r.batch_size[n - 1] > 0) {
      out.batch_start.push_back(bst.s[n - 1]);
      batch_id[n - 1] = out.batch_start.size();
    }

  for (std::size_t m = 0; m < M; ++m) {
    const UserSpec& u = sc.users[m];
    const PartitionChoice& c = choice[m];
    const double f = c.split == 0 ? u.f_max : c.freq;
    std::vector<std::size_t> row(N, kLocal);
    std::vector<double> t(N + 1, 0.0);
    t[0] = u.arrival;
    for (std::size_t n = 1; n <= N; ++n) {
      if (n <= c.split) {
        t[n] = t[n - 1] + local_latency(sc.profile.work[n - 1], f);
      } else {
        row[n - 1] = batch_id[n - 1];
        t[n] = bst.s[n - 1] + edge_batch_latency(sc.profile, n, r.batch_size[n - 1]);
      }
    }
    out.x.push_back(std::move(row));
    out.completion.push_back(std::move(t));
    out.freq.push_back(f);
  }
  r.energy = total_energy(out, sc);
  return r;
}

// Batch-bound search over b = M..1; candidates whose realized batches break
// the assumption are discarded.  nullopt when no bound admits everyone.
inline std::optional<SolveResult> try_ip_ssa(const Scenario& sc, double deadline) {
  const std::size_t M = sc.n_users();
  if (M == 0) return SolveResult{};
  std::optional<SolveResult> best;
  for (std::size_t b = M; b >= 1; --b) {
    std::optional<SolveResult> cand = try_fixed_batch(sc, deadline, b);
    if (!cand) continue;
    std::size_t realized = 0;
    for (std::size_t v : cand->batch_size) realized = std::max(realized, v);
    if (realized <= b && (!best || cand->energy < best->energy)) best = std::move(cand);
  }
  return best;
}

}  // namespace detail

inline SolveResult fixed_batch_schedule(const Scenario& sc, double deadline,
                                        std::size_t b) {
  sc.check();
  std::optional<SolveResult> r = detail::try_fixed_batch(sc, deadline, b);
  if (!r) throw std::domain_error("fixed_batch_schedule: user cannot meet the deadline");
  return *std::move(r);
}

// The batch-bound search always returns a schedule when every user can make
// the deadline one way or another; otherwise it reports the instance as
// unservable.
inline SolveResult ip_ssa(const Scenario& sc, double deadline) {
  sc.check();
  std::optional<SolveResult> r = detail::try_ip_ssa(sc, deadline);
  if (!r) throw std::domain_error("ip_ssa: no batch bound admits every user");
  return *std::move(r);
}

// Spacing rule between deadline groups: the later group's pipeline, sized by
// its own member count, has to fit between the two group deadlines.  Shared
// by the grouping DP and the brute-force oracles so both filter identically.
inline bool groups_fit(double earlier_deadline, double later_deadline,
                       const DnnProfile& p, std::size_t later_size) {
  return earlier_deadline + sum_latency(p, later_size) <= later_deadline;
}

struct GroupingPlan {
  std::vector<std::vector<std::size_t>> groups;  // original user ids, by rising deadline
  std::vector<double> group_deadline;            // common deadline each group is solved at
  std::vector<double> group_energy;
  double energy = 0.0;
  Schedule schedule;
  bool fallback = false;  // no grouping worked; every user runs local instead
};

namespace detail {

inline Scenario subscenario(const Scenario& sc, const std::vector<std::size_t>& ids) {
  Scenario sub;
  sub.profile = sc.profile;
  for (std::size_t id : ids) {
    sub.users.push_back(sc.users[id]);
    sub.deadline.push_back(sc.deadline[id]);
  }
  return sub;
}

inline SolveResult lc_solve(const Scenario& sc) {
  const std::size_t M = sc.n_users();
  const std::size_t N = sc.profile.subtasks();
  SolveResult r;
  for (std::size_t m = 0; m < M; ++m) {
    const PartitionChoice c =
        local_only_choice(sc.users[m], sc.profile, sc.deadline[m]);
    if (!c.feasible)
      throw std::domain_error("baseline: user cannot meet the deadline locally");
    r.split.push_back(N);
    std::vector<double> t(N + 1, 0.0);
    t[0] = sc.users[m].arrival;
    for (std::size_t n = 1; n <= N; ++n)
      t[n] = t[n - 1] + local_latency(sc.profile.work[n - 1], c.freq);
    r.schedule.x.emplace_back(N, kLocal);
    r.schedule.completion.push_back(std::move(t));
    r.schedule.freq.push_back(c.freq);
  }
  r.batch_size.assign(N, 0);
  r.energy = total_energy(r.schedule, sc);
  return r;
}

}  // namespace detail

// Deadline grouping: sort users by deadline, cut the sorted order into
// consecutive groups, serve each group by the batch-bound search at its
// earliest member deadline, and keep adjacent pipelines disjoint via
// groups_fit.  Dynamic program over (first, last) of the final group.
// Groups whose tightened deadline excludes a member price as infinity; if
// nothing finite survives, everyone runs local under their own deadline.
inline GroupingPlan og(const Scenario& sc) {
  sc.check();
  const std::size_t M = sc.n_users();
  GroupingPlan plan;
  if (M == 0) return plan;

  std::vector<std::size_t> order(M);
  for (std::size_t m = 0; m < M; ++m) order[m] = m;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(sc.deadline[a], a) < std::tie(sc.deadline[b], b);
  });
  std::vector<double> dl(M);
  for (std::size_t i = 0; i < M; ++i) dl[i] = sc.deadline[order[i]];

  auto range_ids = [&](std::size_t i, std::size_t j) {
    return std::vector<std::size_t>(order.begin() + i, order.begin() + j + 1);
  };

  // G[i][j]: energy of serving sorted users i..j as one group at deadline dl[i].
  std::vector<std::vector<double>> G(M, std::vector<double>(M, kInf));
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i; j < M; ++j) {
      const std::optional<SolveResult> r =
          detail::try_ip_ssa(detail::subscenario(sc, range_ids(i, j)), dl[i]);
      if (r) G[i][j] = r->energy;
    }

  constexpr std::size_t kNone = std::size_t(-1);
  std::vector<std::vector<double>> S(M, std::vector<double>(M, kInf));
  std::vector<std::vector<std::size_t>> parent(M, std::vector<std::size_t>(M, kNone));
  for (std::size_t j = 0; j < M; ++j) S[0][j] = G[0][j];
  for (std::size_t i = 1; i < M; ++i)
    for (std::size_t j = i; j < M; ++j) {
      if (G[i][j] == kInf) continue;
      const std::size_t size = j - i + 1;
      for (std::size_t prev = 0; prev < i; ++prev) {
        if (S[prev][i - 1] == kInf) continue;
        if (!groups_fit(dl[prev], dl[i], sc.profile, size)) continue;
        const double cand = S[prev][i - 1] + G[i][j];
        if (cand < S[i][j]) {
          S[i][j] = cand;
          parent[i][j] = prev;
        }
      }
    }

  std::size_t best_i = 0;
  for (std::size_t i = 1; i < M; ++i)
    if (S[i][M - 1] < S[best_i][M - 1]) best_i = i;

  if (S[best_i][M - 1] == kInf) {
    const SolveResult local = detail::lc_solve(sc);
    plan.schedule = local.schedule;
    plan.fallback = true;
    for (std::size_t i = 0; i < M; ++i) {
      plan.groups.push_back({order[i]});
      plan.group_deadline.push_back(dl[i]);
      const Scenario solo = detail::subscenario(sc, {order[i]});
      plan.group_energy.push_back(detail::lc_solve(solo).energy);
    }
    plan.energy = local.energy;
    return plan;
  }

  // Walk the parent chain back to recover the cuts.
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t i = best_i, j = M - 1;
  while (true) {
    ranges.emplace_back(i, j);
    if (i == 0) break;
    const std::size_t prev = parent[i][j];
    j = i - 1;
    i = prev;
  }
  std::reverse(ranges.begin(), ranges.end());

  const std::size_t N = sc.profile.subtasks();
  Schedule& out = plan.schedule;
  out.x.assign(M, std::vector<std::size_t>(N, kLocal));
  out.completion.assign(M, std::vector<double>(N + 1, 0.0));
  out.freq.assign(M, 1.0);
  for (const auto& [lo, hi] : ranges) {
    const std::vector<std::size_t> ids = range_ids(lo, hi);
    const Scenario sub = detail::subscenario(sc, ids);
    const SolveResult r = *detail::try_ip_ssa(sub, dl[lo]);
    const std::size_t base = out.batch_start.size();
    for (double s : r.schedule.batch_start) out.batch_start.push_back(s);
    for (std::size_t u = 0; u < ids.size(); ++u) {
      const std::size_t m = ids[u];
      for (std::size_t n = 0; n < N; ++n)
        out.x[m][n] = r.schedule.x[u][n] == kLocal ? kLocal : r.schedule.x[u][n] + base;
      out.completion[m] = r.schedule.completion[u];
      out.freq[m] = r.schedule.freq[u];
    }
    plan.groups.push_back(ids);
    plan.group_deadline.push_back(dl[lo]);
    plan.group_energy.push_back(r.energy);
  }
  normalize(out);
  plan.energy = 0.0;
  for (double e : plan.group_energy) plan.energy += e;
  return plan;
}

enum class BaselineMode { LC, PS, FIFO, IPSSA_NP };

namespace detail {

// Serialized unit-batch placement used by the private-timeline baseline.
struct SuffixJob {
  std::size_t user;
  std::size_t subtask;
  double nominal;
  double start = 0.0;
};

inline SolveResult ps_solve(const Scenario& sc) {
  const std::size_t M = sc.n_users();
  const std::size_t N = sc.profile.subtasks();

  // Every user searches against a private timeline where each sub-task costs
  // M times its unit batch latency; an infeasible full pipeline forces the
  // user local.
  std::vector<PartitionChoice> choice(M);
  std::vector<std::vector<double>> nominal(M);
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<double> s(N, 0.0);
    double t = sc.deadline[m];
    for (std::size_t n = N; n >= 1; --n) {
      t -= double(M) * edge_batch_latency(sc.profile, n, 1);
      s[n - 1] = t;
    }
    nominal[m] = s;
    choice[m] = s[0] < 0.0
                    ? local_only_choice(sc.users[m], sc.profile, sc.deadline[m])
                    : best_partition(sc.users[m], sc.profile, s, sc.deadline[m]);
    if (!choice[m].feasible)
      throw std::domain_error("baseline: user cannot meet the deadline");
  }

  // The shared edge runs the reserved suffixes one batch at a time.  If the
  // serialization pushes someone past the deadline (possible only with
  // unequal deadlines), that user is demoted to local and placement reruns.
  std::vector<SuffixJob> jobs;
  std::vector<double> job_end(M, 0.0);
  while (true) {
    jobs.clear();
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = choice[m].split + 1; n <= N; ++n)
        jobs.push_back({m, n, nominal[m][n - 1]});
    std::sort(jobs.begin(), jobs.end(), [](const SuffixJob& a, const SuffixJob& b) {
      return std::tie(a.nominal, a.subtask, a.user) <
             std::tie(b.nominal, b.subtask, b.user);
    });
    double cursor = 0.0;
    for (SuffixJob& j : jobs) {
      j.start = std::max(j.nominal, cursor);
      cursor = j.start + edge_batch_latency(sc.profile, j.subtask, 1);
      job_end[j.user] = cursor;
    }
    bool demoted = false;
    for (std::size_t m = 0; m < M; ++m)
      if (choice[m].split < N && job_end[m] > sc.deadline[m] + 1e-12) {
        choice[m] = local_only_choice(sc.users[m], sc.profile, sc.deadline[m]);
        if (!choice[m].feasible)
          throw std::domain_error("baseline: user cannot meet the deadline");
        demoted = true;
      }
    if (!demoted) break;
  }

  SolveResult r;
  r.schedule.x.assign(M, std::vector<std::size_t>(N, kLocal));
  r.schedule.completion.assign(M, std::vector<double>(N + 1, 0.0));
  r.schedule.freq.assign(M, 1.0);
  r.batch_size.assign(N, 0);
  for (const SuffixJob& j : jobs) {
    r.schedule.batch_start.push_back(j.start);
    r.schedule.x[j.user][j.subtask - 1] = r.schedule.batch_start.size();
    r.schedule.completion[j.user][j.subtask] =
        j.start + edge_batch_latency(sc.profile, j.subtask, 1);
    ++r.batch_size[j.subtask - 1];
  }
  for (std::size_t m = 0; m < M; ++m) {
    const UserSpec& u = sc.users[m];
    const double f = choice[m].split == 0 ? u.f_max : choice[m].freq;
    r.schedule.freq[m] = f;
    r.schedule.completion[m][0] = u.arrival;
    for (std::size_t n = 1; n <= choice[m].split; ++n)
      r.schedule.completion[m][n] =
          r.schedule.completion[m][n - 1] + local_latency(sc.profile.work[n - 1], f);
    r.split.push_back(choice[m].split);
  }
  normalize(r.schedule);
  r.energy = total_energy(r.schedule, sc);
  return r;
}

inline SolveResult fifo_solve(const Scenario& sc) {
  const std::size_t M = sc.n_users();
  const std::size_t N = sc.profile.subtasks();
  std::vector<std::size_t> order(M);
  for (std::size_t m = 0; m < M; ++m) order[m] = m;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sc.users[a].rate_up != sc.users[b].rate_up)
      return sc.users[a].rate_up > sc.users[b].rate_up;
    return a < b;
  });

  SolveResult r;
  r.schedule.x.assign(M, std::vector<std::size_t>(N, kLocal));
  r.schedule.completion.assign(M, std::vector<double>(N + 1, 0.0));
  r.schedule.freq.assign(M, 0.0);
  r.split.assign(M, N);
  r.batch_size.assign(N, 0);

  double cursor = 0.0;  // end of the last reservation on the edge
  for (std::size_t m : order) {
    const UserSpec& u = sc.users[m];
    // Everything local runs at f_max so uploads start as early as possible.
    double prefix = 0.0;
    std::size_t best_n = N;
    double best_e = local_energy(u.kappa, sc.profile.total_work(), u.f_max);
    double best_start = 0.0;
    if (sc.profile.total_work() / u.f_max > sc.deadline[m] - u.arrival + 1e-12)
      throw std::domain_error("baseline: user cannot meet the deadline");
    for (std::size_t n = 0; n < N; ++n) {
      if (n > 0) prefix += sc.profile.work[n - 1];
      const double ready = u.arrival + prefix / u.f_max +
                           sc.profile.data_bits[n] / u.rate_up;
      const double start = std::max(ready, cursor);
      double done = start;
      for (std::size_t i = n + 1; i <= N; ++i)
        done += edge_batch_latency(sc.profile, i, 1);
      if (done > sc.deadline[m]) continue;
      const double e = local_energy(u.kappa, prefix, u.f_max) +
                       link_cost(sc.profile.data_bits[n], u.rate_up, u.power_up).energy;
      if (e <= best_e) {
        best_e = e;
        best_n = n;
        best_start = start;
      }
    }
    r.split[m] = best_n;
    r.schedule.freq[m] = u.f_max;
    r.schedule.completion[m][0] = u.arrival;
    for (std::size_t n = 1; n <= best_n; ++n)
      r.schedule.completion[m][n] = r.schedule.completion[m][n - 1] +
                                    local_latency(sc.profile.work[n - 1], u.f_max);
    if (best_n < N) {
      double t = best_start;
      for (std::size_t n = best_n + 1; n <= N; ++n) {
        r.schedule.batch_start.push_back(t);
        r.schedule.x[m][n - 1] = r.schedule.batch_start.size();
        t += edge_batch_latency(sc.profile, n, 1);
        r.schedule.completion[m][n] = t;
        ++r.batch_size[n - 1];
      }
      cursor = t;
    }
  }
  normalize(r.schedule);
  r.energy = total_energy(r.schedule, sc);
  return r;
}

// Whole-task offloading: collapse the pipeline to a single sub-task whose
// batch latency is the summed table, solve, and expand the chosen batches
// back into per-sub-task batches run back to back.
inline SolveResult ipssa_np_solve(const Scenario& sc) {
  const std::size_t M = sc.n_users();
  const std::size_t N = sc.profile.subtasks();
  Scenario flat = sc;
  flat.profile.work = {sc.profile.total_work()};
  flat.profile.data_bits = {sc.profile.data_bits.front(), sc.profile.data_bits.back()};
  flat.profile.latency.assign(1, std::vector<double>());
  for (std::size_t b = 1; b <= sc.profile.max_batch(); ++b)
    flat.profile.latency[0].push_back(sum_latency(sc.profile, b));

  double deadline = kInf;
  for (double l : sc.deadline) deadline = std::min(deadline, l);
  const SolveResult collapsed = ip_ssa(flat, deadline);

  SolveResult r;
  r.batch_bound = collapsed.batch_bound;
  r.pipeline_feasible = collapsed.pipeline_feasible;
  r.batch_size.assign(N, 0);
  const std::size_t offloaders =
      collapsed.batch_size.empty() ? 0 : collapsed.batch_size[0];
  if (offloaders > 0) r.batch_size.assign(N, offloaders);

  r.schedule.x.assign(M, std::vector<std::size_t>(N, kLocal));
  r.schedule.completion.assign(M, std::vector<double>(N + 1, 0.0));
  r.schedule.freq = collapsed.schedule.freq;
  double t = collapsed.schedule.batch_start.empty() ? 0.0
                                                    : collapsed.schedule.batch_start[0];
  for (std::size_t n = 1; n <= N && offloaders > 0; ++n) {
    r.schedule.batch_start.push_back(t);
    t += edge_batch_latency(sc.profile, n, offloaders);
  }
  for (std::size_t m = 0; m < M; ++m) {
    r.schedule.completion[m][0] = sc.users[m].arrival;
    if (collapsed.split[m] == 0) {
      r.split.push_back(0);
      for (std::size_t n = 1; n <= N; ++n) {
        r.schedule.x[m][n - 1] = n;
        r.schedule.completion[m][n] =
            r.schedule.batch_start[n - 1] + edge_batch_latency(sc.profile, n, offloaders);
      }
    } else {
      r.split.push_back(N);
      for (std::size_t n = 1; n <= N; ++n)
        r.schedule.completion[m][n] =
            r.schedule.completion[m][n - 1] +
            local_latency(sc.profile.work[n - 1], r.schedule.freq[m]);
    }
  }
  normalize(r.schedule);
  r.energy = total_energy(r.schedule, sc);
  return r;
}

}  // namespace detail

inline SolveResult baseline(const Scenario& sc, BaselineMode mode) {
  sc.check();
  switch (mode) {
    case BaselineMode::LC: return detail::lc_solve(sc);
    case BaselineMode::PS: return detail::ps_solve(sc);
    case BaselineMode::FIFO: return detail::fifo_solve(sc);
    case BaselineMode::IPSSA_NP: return detail::ipssa_np_solve(sc);
  }
  throw std::invalid_argument("baseline: unknown mode");
}

struct ScheduleMetrics {
  double total_energy = 0.0;
  std::vector<double> per_user_energy;
  std::vector<double> mean_batch_size;  // per sub-task; 0 when never offloaded
};

inline ScheduleMetrics schedule_metrics(const Schedule& s, const Scenario& sc) {
  check_shapes(s, sc);
  const std::size_t N = sc.profile.subtasks();
  ScheduleMetrics m;
  m.per_user_energy.assign(sc.n_users(), 0.0);
  for (std::size_t u = 0; u < sc.n_users(); ++u) {
    const UserSpec& spec = sc.users[u];
    double e = 0.0;
    for (std::size_t n = 1; n <= N; ++n)
      if (s.x[u][n - 1] == kLocal)
        e += local_energy(spec.kappa, sc.profile.work[n - 1], s.freq[u]);
    for (std::size_t n = 0; n < N; ++n) {
      if (upload_needed(s, u, n))
        e += link_cost(sc.profile.data_bits[n], spec.rate_up, spec.power_up).energy;
      if (download_needed(s, u, n))
        e += link_cost(sc.profile.data_bits[n], spec.rate_down, spec.power_down).energy;
    }
    m.per_user_energy[u] = e;
    m.total_energy += e;
  }
  std::vector<std::size_t> copies(N, 0), batches(N, 0);
  for (const BatchView& v : batch_views(s))
    if (!v.members.empty()) {
      copies[v.subtask - 1] += v.size();
      ++batches[v.subtask - 1];
    }
  for (std::size_t n = 0; n < N; ++n)
    m.mean_batch_size.push_back(batches[n] == 0 ? 0.0
                                                : double(copies[n]) / double(batches[n]));
  return m;
}

}  // namespace coinfer
