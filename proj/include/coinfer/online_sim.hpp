#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core_model.hpp"
#include "offline_solvers.hpp"
#include "scenario_gen.hpp"
#include "schedule.hpp"

namespace coinfer {

// Task generation process.  A user whose last task's constraint window has
// lapsed draws a fresh task: every slot with probability p_arrive under
// Bernoulli, or on the first such slot under Immediate (the p_arrive = 1
// special case).  Task deadlines are uniform on [l_low, l_high].
struct ArrivalModel {
  enum class Kind { Bernoulli, Immediate };
  Kind kind = Kind::Bernoulli;
  double p_arrive = 0.25;
  double l_low = 0.25;
  double l_high = 1.0;

  void check() const {
    if (l_low <= 0.0 || l_high < l_low)
      throw std::invalid_argument("arrivals: bad deadline range");
    if (kind == Kind::Bernoulli && (p_arrive < 0.0 || p_arrive > 1.0))
      throw std::invalid_argument("arrivals: p_arrive must lie in [0, 1]");
  }
};

struct MdpState {
  std::vector<double> deadline;  // remaining seconds per user; 0 = idle
  double edge_busy = 0.0;        // seconds until the planned batches finish
};

struct ActionVec {
  int mode = 0;            // 0 wait, 1 process locally now, 2 call the solver
  double threshold = 0.0;  // deadline clip applied by mode 2
};

enum class OnlineSolver { IPSSA, OG };

struct StepInfo {
  double energy = 0.0;          // solver plus voluntary local energy
  double forced_cost = 0.0;     // full-speed rescue energy
  std::size_t forced_count = 0;
  std::size_t pending_before = 0;
  double busy_before = 0.0;
  bool solver_invoked = false;
  std::size_t solver_tasks = 0;
  std::size_t solver_groups = 0;
  std::vector<std::size_t> batch_sizes;  // realized sizes, this call only
};

// Slotted-time control loop around the offline solvers.  Decisions happen at
// multiples of the slot length; deadlines stay continuous.  Exactly one task
// per user is in flight: a new one can only appear once the previous task's
// constraint window has fully passed, whether or not it was served early.
class OnlineEnv {
 public:
  OnlineEnv(Scenario base, ArrivalModel arrivals,
            OnlineSolver solver = OnlineSolver::OG, double slot = 0.025,
            std::uint64_t seed = 1)
      : sc_(std::move(base)),
        arrivals_(arrivals),
        solver_(solver),
        slot_(slot),
        seed_(seed) {
    sc_.check();
    arrivals_.check();
    if (slot_ <= 0.0) throw std::invalid_argument("online: slot must be positive");
    for (std::size_t m = 0; m < sc_.n_users(); ++m) {
      if (sc_.users[m].arrival != 0.0)
        throw std::invalid_argument("online: users must be released at time zero");
      floor_.push_back(sc_.profile.total_work() / sc_.users[m].f_max);
      if (floor_.back() > arrivals_.l_low)
        throw std::invalid_argument(
            "online: l_low below a user's all-local processing floor");
    }
    reset();
  }

  const MdpState& state() const { return st_; }
  const Scenario& scenario() const { return sc_; }
  const ArrivalModel& arrivals() const { return arrivals_; }
  double slot() const { return slot_; }
  double now() const { return double(tick_) * slot_; }
  double local_floor(std::size_t m) const { return floor_[m]; }

  MdpState reset() {
    rng_.seed(seed_);
    tick_ = 0;
    st_.deadline.assign(sc_.n_users(), 0.0);
    st_.edge_busy = 0.0;
    expiry_.assign(sc_.n_users(), -1.0);
    sample_arrivals();
    return st_;
  }

  MdpState reset(std::uint64_t seed) {
    seed_ = seed;
    return reset();
  }

  // Overrides the current state, e.g. to replay a snapshot.  Pending tasks
  // are treated as if they had just arrived with the given remaining time.
  void load_state(const MdpState& s) {
    if (s.deadline.size() != sc_.n_users())
      throw std::invalid_argument("load_state: one deadline per user required");
    for (double l : s.deadline)
      if (l < 0.0) throw std::invalid_argument("load_state: negative deadline");
    if (s.edge_busy < 0.0) throw std::invalid_argument("load_state: negative busy time");
    st_ = s;
    for (std::size_t m = 0; m < sc_.n_users(); ++m)
      expiry_[m] = st_.deadline[m] > 0.0 ? now() + st_.deadline[m] : now() - 1.0;
  }

  // Applies one action, advances time by one slot, samples arrivals for the
  // next slot, and returns the reward.  Out-of-range actions are clamped;
  // calling the solver while the edge is busy degrades to doing nothing.
  double step(const ActionVec& a, StepInfo* info_out = nullptr) {
    StepInfo info;
    info.pending_before = pending_count();
    info.busy_before = st_.edge_busy;

    int mode = std::min(std::max(a.mode, 0), 2);
    const double l_th =
        std::min(std::max(a.threshold, 0.0), arrivals_.l_high);
    if (mode == 2 && st_.edge_busy > 0.0) mode = 0;

    if (mode == 1) {
      process_all_local(info);
    } else if (mode == 2) {
      invoke_solver(l_th, info);
    }

    // Tasks that would no longer fit an all-local run by the next decision
    // are rescued now at full speed.
    for (std::size_t m = 0; m < sc_.n_users(); ++m) {
      if (st_.deadline[m] <= 0.0) continue;
      if (st_.deadline[m] - slot_ < floor_[m]) {
        info.forced_cost += local_energy(sc_.users[m].kappa,
                                         sc_.profile.total_work(),
                                         sc_.users[m].f_max);
        ++info.forced_count;
        st_.deadline[m] = 0.0;
      }
    }

    ++tick_;
    for (double& l : st_.deadline)
      if (l > 0.0) l -= slot_;
    st_.edge_busy = std::max(0.0, st_.edge_busy - slot_);
    sample_arrivals();

    for (std::size_t m = 0; m < sc_.n_users(); ++m)
      if (st_.deadline[m] > 0.0 && st_.deadline[m] < floor_[m] - 1e-12)
        throw std::logic_error("online: task slipped below its local floor");

    const double reward = -(info.energy + info.forced_cost);
    if (info_out) *info_out = std::move(info);
    return reward;
  }

 private:
  std::size_t pending_count() const {
    std::size_t n = 0;
    for (double l : st_.deadline) n += l > 0.0;
    return n;
  }

  void process_all_local(StepInfo& info) {
    for (std::size_t m = 0; m < sc_.n_users(); ++m) {
      if (st_.deadline[m] <= 0.0) continue;
      const UserSpec& u = sc_.users[m];
      const double f = std::min(
          std::max(sc_.profile.total_work() / st_.deadline[m], u.f_min), u.f_max);
      info.energy += local_energy(u.kappa, sc_.profile.total_work(), f);
      st_.deadline[m] = 0.0;
    }
  }

  void invoke_solver(double l_th, StepInfo& info) {
    std::vector<std::size_t> ids;
    for (std::size_t m = 0; m < sc_.n_users(); ++m)
      if (st_.deadline[m] > 0.0) ids.push_back(m);
    if (ids.empty()) return;

    Scenario sub;
    sub.profile = sc_.profile;
    for (std::size_t m : ids) {
      sub.users.push_back(sc_.users[m]);
      // Looser tasks are pulled down to the threshold to cap the busy
      // period; the clip never cuts into a task's all-local floor.
      const double l = st_.deadline[m];
      sub.deadline.push_back(l >= l_th ? std::max(l_th, floor_[m]) : l);
    }

    info.solver_invoked = true;
    info.solver_tasks = ids.size();
    const Schedule* sched = nullptr;
    GroupingPlan plan;
    SolveResult flat;
    if (solver_ == OnlineSolver::OG) {
      plan = og(sub);
      info.energy += plan.energy;
      info.solver_groups = plan.groups.size();
      sched = &plan.schedule;
      st_.edge_busy =
          plan.schedule.batch_start.empty() ? 0.0 : plan.group_deadline.back();
    } else {
      double l_common = sub.deadline[0];
      for (double l : sub.deadline) l_common = std::min(l_common, l);
      flat = ip_ssa(sub, l_common);
      info.energy += flat.energy;
      info.solver_groups = 1;
      sched = &flat.schedule;
      st_.edge_busy = flat.schedule.batch_start.empty() ? 0.0 : l_common;
    }
    for (const BatchView& b : batch_views(*sched))
      info.batch_sizes.push_back(b.size());
    for (std::size_t m : ids) st_.deadline[m] = 0.0;
  }

  void sample_arrivals() {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> dl(arrivals_.l_low, arrivals_.l_high);
    for (std::size_t m = 0; m < sc_.n_users(); ++m) {
      if (st_.deadline[m] > 0.0) continue;
      if (!(now() > expiry_[m])) continue;
      if (arrivals_.kind == ArrivalModel::Kind::Bernoulli) {
        if (arrivals_.p_arrive <= 0.0) continue;
        if (arrivals_.p_arrive < 1.0 && coin(rng_) >= arrivals_.p_arrive) continue;
      }
      const double l = arrivals_.l_low < arrivals_.l_high ? dl(rng_) : arrivals_.l_low;
      st_.deadline[m] = l;
      expiry_[m] = now() + l;
    }
  }

  Scenario sc_;
  ArrivalModel arrivals_;
  OnlineSolver solver_;
  double slot_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::size_t tick_ = 0;
  MdpState st_;
  std::vector<double> floor_;
  std::vector<double> expiry_;  // when each user's last task stops gating arrivals
};

struct TraceRow {
  std::size_t slot = 0;
  int action_c = 0;
  double action_lth = 0.0;
  double reward = 0.0;
  double energy = 0.0;
  std::size_t forced_count = 0;
  std::size_t pending_count = 0;
  double edge_busy = 0.0;
};

struct EpisodeMetrics {
  std::size_t slots = 0;
  double total_energy = 0.0;
  double total_forced_cost = 0.0;
  double total_reward = 0.0;
  std::size_t forced_count = 0;
  std::size_t solver_calls = 0;
  std::size_t solver_tasks = 0;
  std::size_t solver_groups = 0;
  std::size_t batches = 0;
  std::size_t batched_tasks = 0;
  std::vector<TraceRow> trace;

  double mean_tasks_per_call() const {
    return solver_calls ? double(solver_tasks) / double(solver_calls) : 0.0;
  }
  double mean_tasks_per_group() const {
    return solver_groups ? double(solver_tasks) / double(solver_groups) : 0.0;
  }
  double mean_batch_size() const {
    return batches ? double(batched_tasks) / double(batches) : 0.0;
  }
};

using PolicyFn = std::function<ActionVec(const MdpState&)>;

// Always processes locally as soon as anything is pending.
inline PolicyFn local_policy() {
  return [](const MdpState& s) {
    for (double l : s.deadline)
      if (l > 0.0) return ActionVec{1, 0.0};
    return ActionVec{0, 0.0};
  };
}

// Calls the solver a fixed number of slots after the edge turns idle with
// tasks pending; window 0 calls it immediately.  The threshold is pinned to
// l_high, so the clip never tightens anything.
class TimeWindowPolicy {
 public:
  TimeWindowPolicy(std::size_t window, double l_high)
      : window_(window), l_th_(l_high) {}

  ActionVec operator()(const MdpState& s) {
    bool pending = false;
    for (double l : s.deadline) pending |= l > 0.0;
    if (s.edge_busy > 0.0 || !pending) {
      wait_ = 0;
      return {0, 0.0};
    }
    if (wait_ >= window_) {
      wait_ = 0;
      return {2, l_th_};
    }
    ++wait_;
    return {0, 0.0};
  }

 private:
  std::size_t window_;
  double l_th_;
  std::size_t wait_ = 0;
};

inline EpisodeMetrics run_episode(OnlineEnv& env, PolicyFn policy,
                                  std::size_t horizon) {
  if (horizon == 0) throw std::invalid_argument("run_episode: empty horizon");
  EpisodeMetrics m;
  m.slots = horizon;
  env.reset();
  for (std::size_t t = 0; t < horizon; ++t) {
    const ActionVec a = policy(env.state());
    StepInfo info;
    const double r = env.step(a, &info);
    m.total_energy += info.energy;
    m.total_forced_cost += info.forced_cost;
    m.forced_count += info.forced_count;
    m.solver_calls += info.solver_invoked;
    m.solver_tasks += info.solver_tasks;
    m.solver_groups += info.solver_groups;
    m.batches += info.batch_sizes.size();
    for (std::size_t b : info.batch_sizes) m.batched_tasks += b;
    m.trace.push_back({t, a.mode, a.threshold, r, info.energy,
                       info.forced_count, info.pending_before,
                       info.busy_before});
  }
  // Defined through the totals so the accounting identity is exact; the
  // slot-ordered reward sum can differ from it in the last bits.
  m.total_reward = -(m.total_energy + m.total_forced_cost);
  return m;
}

inline EpisodeMetrics run_episode(OnlineEnv& env, PolicyFn policy,
                                  std::size_t horizon, std::uint64_t seed) {
  env.reset(seed);
  // run_episode resets again with the seed already in place.
  return run_episode(env, std::move(policy), horizon);
}

inline void write_trace_csv(const std::vector<TraceRow>& trace,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << "slot,action_c,action_lth,reward,energy,forced_count,pending_count,"
         "edge_busy\n";
  for (const TraceRow& r : trace)
    out << r.slot << "," << r.action_c << "," << detail::fmt_g17(r.action_lth)
        << "," << detail::fmt_g17(r.reward) << "," << detail::fmt_g17(r.energy)
        << "," << r.forced_count << "," << r.pending_count << ","
        << detail::fmt_g17(r.edge_busy) << "\n";
}

inline void write_episode_summary(const EpisodeMetrics& m, const std::string& path) {
  nlohmann::json j;
  j["slots"] = m.slots;
  j["total_energy"] = m.total_energy;
  j["total_forced_cost"] = m.total_forced_cost;
  j["total_reward"] = m.total_reward;
  j["forced_count"] = m.forced_count;
  j["solver_calls"] = m.solver_calls;
  j["mean_tasks_per_call"] = m.mean_tasks_per_call();
  j["mean_tasks_per_group"] = m.mean_tasks_per_group();
  j["mean_batch_size"] = m.mean_batch_size();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_episode_summary: cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace coinfer
