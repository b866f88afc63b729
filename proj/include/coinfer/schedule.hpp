#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core_model.hpp"

namespace coinfer {

// Placement value 0 means the sub-task runs on the device.
constexpr std::size_t kLocal = 0;

// A complete assignment for one scenario.
//
//   x[m][n-1]      0 = local, k >= 1 = member of batch k
//   batch_start    s_k at index k-1, ascending once normalized
//   completion     t[m][n] for n = 0..N; t[m][0] is the arrival time
//   freq           f_m; users that compute nothing locally carry a
//                  placeholder inside [f_min, f_max]
struct Schedule {
  std::vector<std::vector<std::size_t>> x;
  std::vector<double> batch_start;
  std::vector<std::vector<double>> completion;
  std::vector<double> freq;

  std::size_t n_users() const { return x.size(); }
  std::size_t n_batches() const { return batch_start.size(); }
};

struct Violation {
  std::string constraint_id;
  std::size_t user = 0;     // m, 0-based
  std::size_t subtask = 0;  // n, 1-based (0 when not tied to a sub-task)
  std::size_t batch = 0;    // k, 1-based (0 when not tied to a batch)
  double slack = 0.0;       // negative: amount by which the constraint is missed
};

namespace detail {

inline bool placed_local(const Schedule& s, std::size_t m, std::size_t n) {
  // n = 0 is the virtual input stage, always at the device.
  return n == 0 || s.x[m][n - 1] == kLocal;
}

}  // namespace detail

// y^u_{m,n}: B_n crosses the uplink because sub-task n+1 runs on the edge
// while its input was produced (or released) at the device.  The final
// output B_N never moves, so n ranges over 0..N-1.
inline bool upload_needed(const Schedule& s, std::size_t m, std::size_t n) {
  const std::size_t N = s.x[m].size();
  if (n >= N) return false;
  return !detail::placed_local(s, m, n + 1) && detail::placed_local(s, m, n);
}

// y^d_{m,n}: B_n crosses the downlink because sub-task n+1 runs at the
// device on edge-produced data.
inline bool download_needed(const Schedule& s, std::size_t m, std::size_t n) {
  const std::size_t N = s.x[m].size();
  if (n == 0 || n >= N) return false;
  return detail::placed_local(s, m, n + 1) && !detail::placed_local(s, m, n);
}

struct BatchView {
  std::vector<std::pair<std::size_t, std::size_t>> members;  // (m, n)
  std::size_t subtask = 0;  // of the first member; 0 for an empty batch
  std::size_t size() const { return members.size(); }
};

inline std::vector<BatchView> batch_views(const Schedule& s) {
  std::vector<BatchView> views(s.n_batches());
  for (std::size_t m = 0; m < s.n_users(); ++m)
    for (std::size_t j = 0; j < s.x[m].size(); ++j) {
      const std::size_t k = s.x[m][j];
      if (k == kLocal) continue;
      if (k > s.n_batches())
        throw std::invalid_argument("schedule: batch id beyond start-time table");
      if (views[k - 1].members.empty()) views[k - 1].subtask = j + 1;
      views[k - 1].members.emplace_back(m, j + 1);
    }
  return views;
}

// Drops empty batches and renumbers the rest densely, ordered by start time.
inline void normalize(Schedule& s) {
  const std::vector<BatchView> views = batch_views(s);
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < views.size(); ++k)
    if (!views[k].members.empty()) order.push_back(k);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (s.batch_start[a] != s.batch_start[b]) return s.batch_start[a] < s.batch_start[b];
    return views[a].subtask < views[b].subtask;
  });
  std::vector<std::size_t> remap(views.size(), 0);
  std::vector<double> starts;
  starts.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    remap[order[i]] = i + 1;
    starts.push_back(s.batch_start[order[i]]);
  }
  for (auto& row : s.x)
    for (auto& v : row)
      if (v != kLocal) v = remap[v - 1];
  s.batch_start = std::move(starts);
}

inline void check_shapes(const Schedule& s, const Scenario& sc) {
  const std::size_t M = sc.n_users();
  const std::size_t N = sc.profile.subtasks();
  if (s.x.size() != M || s.completion.size() != M || s.freq.size() != M)
    throw std::invalid_argument("schedule: user dimension mismatch");
  for (std::size_t m = 0; m < M; ++m) {
    if (s.x[m].size() != N)
      throw std::invalid_argument("schedule: sub-task dimension mismatch");
    if (s.completion[m].size() != N + 1)
      throw std::invalid_argument("schedule: completion rows need N+1 entries");
  }
}

// Checks the constraint system at the given time tolerance and reports every
// violation found.  Constraint ids:
//   C6-once        sub-task placed exactly once (structural under this
//                  representation; kept for completeness)
//   C7-batchsize   declared batches must be nonempty / sizes consistent
//   C8-samesubtask a batch carries copies of a single sub-task
//   C9-batchready  batch starts only after every member uploaded
//   C11-occupancy  batches occupy the edge one at a time, in id order
//   C12-precedence sub-task completion respects compute and transfer times
//   C15-deadline   t_{m,N} <= l_m
//   C17-initial    t_{m,0} equals the task release time
inline std::vector<Violation> validate(const Schedule& s, const Scenario& sc,
                                       double tol = 1e-9) {
  check_shapes(s, sc);
  const std::size_t M = sc.n_users();
  const std::size_t N = sc.profile.subtasks();
  const std::vector<BatchView> views = batch_views(s);
  std::vector<Violation> out;

  for (std::size_t k = 0; k < views.size(); ++k) {
    if (views[k].members.empty()) {
      out.push_back({"C7-batchsize", 0, 0, k + 1, -1.0});
      continue;
    }
    for (const auto& [m, n] : views[k].members)
      if (n != views[k].subtask) {
        out.push_back({"C8-samesubtask", m, n, k + 1, -1.0});
        break;
      }
  }

  for (std::size_t m = 0; m < M; ++m) {
    const double drift = s.completion[m][0] - sc.users[m].arrival;
    if (drift < -tol || drift > tol)
      out.push_back({"C17-initial", m, 0, 0, -(drift < 0 ? -drift : drift)});
  }

  // Batch readiness: every member must have its input at the edge by s_k.
  for (std::size_t k = 0; k < views.size(); ++k) {
    for (const auto& [m, n] : views[k].members) {
      double ready = s.completion[m][n - 1];
      if (upload_needed(s, m, n - 1))
        ready += sc.profile.data_bits[n - 1] / sc.users[m].rate_up;
      const double slack = s.batch_start[k] - ready;
      if (slack < -tol) out.push_back({"C9-batchready", m, n, k + 1, slack});
    }
  }

  // Edge occupancy between consecutive batch ids.
  for (std::size_t k = 0; k + 1 < views.size(); ++k) {
    const double busy = views[k].members.empty()
                            ? 0.0
                            : edge_batch_latency(sc.profile, views[k].subtask,
                                                 views[k].size());
    const double slack = s.batch_start[k + 1] - s.batch_start[k] - busy;
    if (slack < -tol)
      out.push_back({"C11-occupancy", 0, views[k].subtask, k + 1, slack});
  }

  // Precedence per (m, n).
  for (std::size_t m = 0; m < M; ++m) {
    const UserSpec& u = sc.users[m];
    for (std::size_t n = 1; n <= N; ++n) {
      double required;
      if (s.x[m][n - 1] == kLocal) {
        required = s.completion[m][n - 1];
        if (download_needed(s, m, n - 1))
          required += sc.profile.data_bits[n - 1] / u.rate_down;
        required += local_latency(sc.profile.work[n - 1], s.freq[m]);
      } else {
        const std::size_t k = s.x[m][n - 1];
        required = s.batch_start[k - 1] +
                   edge_batch_latency(sc.profile, n, views[k - 1].size());
      }
      const double slack = s.completion[m][n] - required;
      if (slack < -tol) out.push_back({"C12-precedence", m, n, 0, slack});
    }
    const double slack = sc.deadline[m] - s.completion[m][N];
    if (slack < -tol) out.push_back({"C15-deadline", m, N, 0, slack});
  }
  return out;
}

// Objective value of the schedule: local compute energy plus every uplink
// and downlink crossing, including the initial upload of B_0 when sub-task 1
// is offloaded.  Depends only on placements and frequencies.
inline double total_energy(const Schedule& s, const Scenario& sc) {
  check_shapes(s, sc);
  const std::size_t N = sc.profile.subtasks();
  double total = 0.0;
  for (std::size_t m = 0; m < sc.n_users(); ++m) {
    const UserSpec& u = sc.users[m];
    for (std::size_t n = 1; n <= N; ++n)
      if (s.x[m][n - 1] == kLocal)
        total += local_energy(u.kappa, sc.profile.work[n - 1], s.freq[m]);
    for (std::size_t n = 0; n < N; ++n) {
      if (upload_needed(s, m, n))
        total += link_cost(sc.profile.data_bits[n], u.rate_up, u.power_up).energy;
      if (download_needed(s, m, n))
        total += link_cost(sc.profile.data_bits[n], u.rate_down, u.power_down).energy;
    }
  }
  return total;
}

inline void to_json(nlohmann::json& j, const Schedule& s) {
  j = nlohmann::json{{"x", s.x}, {"s", s.batch_start}, {"t", s.completion}, {"f", s.freq}};
}

inline void from_json(const nlohmann::json& j, Schedule& s) {
  j.at("x").get_to(s.x);
  j.at("s").get_to(s.batch_start);
  j.at("t").get_to(s.completion);
  j.at("f").get_to(s.freq);
}

inline void save_schedule(const Schedule& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_schedule: cannot open " + path);
  out << nlohmann::json(s).dump(2) << "\n";
}

inline Schedule load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_schedule: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j.get<Schedule>();
}

}  // namespace coinfer
