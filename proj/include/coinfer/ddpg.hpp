#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <coinfer/mlp.hpp>
#include <coinfer/online_sim.hpp>

namespace coinfer {

struct Transition {
  std::vector<double> s;
  std::array<double, 2> a;  // bounded policy channels in [-1, 1]
  double r = 0.0;
  std::vector<double> s2;
  bool terminal = false;
};

// Fixed-capacity ring.  Once full, each push overwrites the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : cap_(capacity) {
    if (cap_ == 0) throw std::invalid_argument("replay: zero capacity");
  }

  std::size_t capacity() const { return cap_; }
  std::size_t size() const { return data_.size(); }

  void push(Transition t) {
    if (data_.size() < cap_) {
      data_.push_back(std::move(t));
    } else {
      data_[next_] = std::move(t);
      next_ = (next_ + 1) % cap_;
    }
  }

  // i = 0 is the oldest entry still stored.
  const Transition& nth_oldest(std::size_t i) const {
    if (i >= data_.size()) throw std::out_of_range("replay: index");
    if (data_.size() < cap_) return data_[i];
    return data_[(next_ + i) % cap_];
  }

  // k distinct entries, uniform over the current contents (Floyd's method,
  // so no O(size) scratch per call).
  std::vector<const Transition*> sample(std::size_t k,
                                        std::mt19937_64& rng) const {
    if (k > data_.size()) throw std::invalid_argument("replay: sample too large");
    std::unordered_set<std::size_t> chosen;
    std::vector<const Transition*> out;
    out.reserve(k);
    for (std::size_t j = data_.size() - k; j < data_.size(); ++j) {
      std::uniform_int_distribution<std::size_t> u(0, j);
      const std::size_t t = u(rng);
      const std::size_t pick = chosen.insert(t).second ? t : (chosen.insert(j), j);
      out.push_back(&data_[pick]);
    }
    return out;
  }

 private:
  std::size_t cap_;
  std::size_t next_ = 0;  // overwrite cursor, meaningful once full
  std::vector<Transition> data_;
};

struct TrainConfig {
  double gamma = 0.99;
  std::size_t minibatch = 128;
  double tau = 0.005;
  double noise_std = 0.1;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::size_t updates_per_step = 200;  // applied after solver-invoking steps
  std::size_t buffer_capacity = 1000000;
  std::size_t hidden = 128;

  void check() const {
    if (gamma < 0.0 || gamma >= 1.0)
      throw std::invalid_argument("train: gamma outside [0, 1)");
    if (minibatch == 0) throw std::invalid_argument("train: empty minibatch");
    if (tau <= 0.0 || tau > 1.0)
      throw std::invalid_argument("train: tau outside (0, 1]");
    if (noise_std < 0.0) throw std::invalid_argument("train: negative noise");
    if (actor_lr <= 0.0 || critic_lr <= 0.0)
      throw std::invalid_argument("train: learning rates must be positive");
    if (buffer_capacity < minibatch)
      throw std::invalid_argument("train: buffer smaller than a minibatch");
    if (hidden == 0) throw std::invalid_argument("train: zero hidden width");
  }
};

// Deterministic actor-critic with target networks.  States are the clipped
// deadline vector plus the edge busy period, both scaled by l_high; actions
// are two bounded channels: the first picks the mode by equal thirds of
// [-1, 1], the second maps affinely onto a clip threshold in [0, l_high].
class DdpgAgent {
 public:
  struct Losses {
    double critic = 0.0;
    double actor = 0.0;
  };

  DdpgAgent(std::size_t n_users, double l_high, TrainConfig cfg = {},
            std::uint64_t seed = 1)
      : l_high_(l_high),
        cfg_(cfg),
        buffer_(cfg.buffer_capacity),
        actor_(n_users + 1, 2, Mlp::Output::Bounded, seed * 4 + 0, cfg.hidden),
        critic_(n_users + 3, 1, Mlp::Output::Linear, seed * 4 + 1, cfg.hidden),
        actor_target_(actor_),
        critic_target_(critic_),
        actor_opt_(cfg.actor_lr),
        critic_opt_(cfg.critic_lr),
        rng_(seed * 4 + 2) {
    if (n_users == 0) throw std::invalid_argument("agent: no users");
    if (!(l_high > 0.0)) throw std::invalid_argument("agent: l_high must be positive");
    cfg_.check();
  }

  std::size_t state_dim() const { return actor_.input_dim(); }
  double threshold_high() const { return l_high_; }
  const TrainConfig& config() const { return cfg_; }
  ReplayBuffer& buffer() { return buffer_; }
  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  Mlp& actor_target() { return actor_target_; }
  Mlp& critic_target() { return critic_target_; }

  std::vector<double> normalize(const MdpState& s) const {
    if (s.deadline.size() + 1 != state_dim())
      throw std::invalid_argument("agent: state size");
    std::vector<double> x;
    x.reserve(state_dim());
    for (double l : s.deadline) x.push_back(l / l_high_);
    x.push_back(s.edge_busy / l_high_);
    return x;
  }

  // Bounded channels with exploration noise added before the action mapping.
  std::array<double, 2> act(const std::vector<double>& state, double noise_std) {
    std::vector<double> y = actor_.forward(state);
    std::array<double, 2> out{y[0], y[1]};
    if (noise_std > 0.0) {
      std::normal_distribution<double> n(0.0, noise_std);
      for (double& v : out) v = std::min(std::max(v + n(rng_), -1.0), 1.0);
    }
    return out;
  }

  static ActionVec to_action(const std::array<double, 2>& y, double l_high) {
    ActionVec a;
    a.mode = y[0] < -1.0 / 3.0 ? 0 : (y[0] <= 1.0 / 3.0 ? 1 : 2);
    a.threshold = (y[1] + 1.0) * 0.5 * l_high;
    a.threshold = std::min(std::max(a.threshold, 0.0), l_high);
    return a;
  }

  ActionVec select_action(const MdpState& s, double noise_std) {
    return to_action(act(normalize(s), noise_std), l_high_);
  }

  void remember(std::vector<double> s, std::array<double, 2> a, double r,
                std::vector<double> s2, bool terminal) {
    buffer_.push({std::move(s), a, r, std::move(s2), terminal});
  }

  // One minibatch update of critic then actor, followed by target tracking.
  // Skipped (returns nullopt) until the buffer holds a full minibatch.
  std::optional<Losses> train_step() {
    if (buffer_.size() < cfg_.minibatch) return std::nullopt;
    const auto batch = buffer_.sample(cfg_.minibatch, rng_);
    const double inv = 1.0 / double(batch.size());
    Losses loss;

    critic_.zero_grad();
    for (const Transition* tr : batch) {
      const std::vector<double> a2 = actor_target_.forward(tr->s2);
      const double q2 = critic_target_.forward(concat(tr->s2, {a2[0], a2[1]}))[0];
      const double target = tr->r + (tr->terminal ? 0.0 : cfg_.gamma * q2);
      Mlp::Tape tape;
      const double q = critic_.forward(concat(tr->s, tr->a), &tape)[0];
      const double err = q - target;
      loss.critic += err * err * inv;
      critic_.backward(tape, {2.0 * err * inv});
    }
    critic_opt_.step(critic_);

    actor_.zero_grad();
    for (const Transition* tr : batch) {
      Mlp::Tape atape, qtape;
      const std::vector<double> a = actor_.forward(tr->s, &atape);
      const double q = critic_.forward(concat(tr->s, {a[0], a[1]}), &qtape)[0];
      loss.actor -= q * inv;
      // Only the input gradient matters here; the parameter gradients this
      // accumulates into the critic are discarded below.
      const std::vector<double> dx = critic_.backward(qtape, {-inv});
      actor_.backward(atape, {dx[dx.size() - 2], dx[dx.size() - 1]});
    }
    critic_.zero_grad();
    actor_opt_.step(actor_);

    soft_update(actor_target_, actor_, cfg_.tau);
    soft_update(critic_target_, critic_, cfg_.tau);
    return loss;
  }

  void train(std::size_t updates) {
    for (std::size_t i = 0; i < updates; ++i)
      if (!train_step()) return;
  }

 private:
  static std::vector<double> concat(const std::vector<double>& s,
                                    const std::array<double, 2>& a) {
    std::vector<double> x;
    x.reserve(s.size() + 2);
    x.insert(x.end(), s.begin(), s.end());
    x.push_back(a[0]);
    x.push_back(a[1]);
    return x;
  }

  double l_high_;
  TrainConfig cfg_;
  ReplayBuffer buffer_;
  Mlp actor_, critic_, actor_target_, critic_target_;
  Adam actor_opt_, critic_opt_;
  std::mt19937_64 rng_;

  friend void to_json(nlohmann::json&, const DdpgAgent&);
  friend DdpgAgent load_agent(const std::string&);
};

// Greedy wrapper for run_episode and the evaluation paths.
inline PolicyFn agent_policy(DdpgAgent& agent) {
  return [&agent](const MdpState& s) { return agent.select_action(s, 0.0); };
}

struct CurvePoint {
  std::size_t episode = 0;
  double mean_reward = 0.0;  // per slot, forced-rescue penalties included
  double mean_energy = 0.0;  // per slot, scheduled energy only
};

inline void write_training_curve(const std::vector<CurvePoint>& curve,
                                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "episode,mean_reward,mean_energy\n";
  for (const CurvePoint& p : curve)
    out << p.episode << ',' << detail::fmt_g17(p.mean_reward) << ','
        << detail::fmt_g17(p.mean_energy) << '\n';
}

struct TrainOptions {
  std::size_t episodes = 200;
  std::size_t horizon = 200;  // slots per training episode
  std::uint64_t seed = 1;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d4a9749d57afbbull;  // splitmix64 finalizer
  return x ^ (x >> 31);
}

}  // namespace detail

// Episode loop: act with exploration noise, store the transition, and run a
// burst of updates after every step that invoked the batch solver.  The
// horizon is a training cutoff, not a terminal state, so transitions are
// stored non-terminal and the critic keeps bootstrapping across episodes.
inline std::vector<CurvePoint> train_ddpg(OnlineEnv& env, DdpgAgent& agent,
                                          const TrainOptions& opt) {
  if (opt.episodes == 0 || opt.horizon == 0)
    throw std::invalid_argument("train: empty schedule");
  std::vector<CurvePoint> curve;
  curve.reserve(opt.episodes);
  for (std::size_t ep = 0; ep < opt.episodes; ++ep) {
    env.reset(detail::mix64(opt.seed + ep));
    std::vector<double> s = agent.normalize(env.state());
    double total_r = 0.0, total_e = 0.0;
    for (std::size_t t = 0; t < opt.horizon; ++t) {
      const std::array<double, 2> y = agent.act(s, agent.config().noise_std);
      StepInfo info;
      const double r =
          env.step(DdpgAgent::to_action(y, agent.threshold_high()), &info);
      std::vector<double> s2 = agent.normalize(env.state());
      agent.remember(s, y, r, s2, false);
      total_r += r;
      total_e += info.energy;
      if (info.solver_invoked) agent.train(agent.config().updates_per_step);
      s = std::move(s2);
    }
    curve.push_back({ep, total_r / double(opt.horizon),
                     total_e / double(opt.horizon)});
  }
  return curve;
}

inline void to_json(nlohmann::json& j, const DdpgAgent& agent) {
  j["state_dim"] = agent.state_dim();
  j["action_dim"] = 2;
  j["normalization"] = {{"deadline_scale", agent.l_high_},
                        {"busy_scale", agent.l_high_}};
  j["action_bounds"] = {{"mode", {0, 2}},
                        {"threshold", {0.0, agent.l_high_}}};
  j["config"] = {{"gamma", agent.cfg_.gamma},
                 {"minibatch", agent.cfg_.minibatch},
                 {"tau", agent.cfg_.tau},
                 {"noise_std", agent.cfg_.noise_std},
                 {"actor_lr", agent.cfg_.actor_lr},
                 {"critic_lr", agent.cfg_.critic_lr},
                 {"updates_per_step", agent.cfg_.updates_per_step},
                 {"buffer_capacity", agent.cfg_.buffer_capacity},
                 {"hidden", agent.cfg_.hidden}};
  j["actor"] = agent.actor_;
  j["critic"] = agent.critic_;
  j["actor_target"] = agent.actor_target_;
  j["critic_target"] = agent.critic_target_;
}

inline void save_agent(const DdpgAgent& agent, const std::string& path) {
  nlohmann::json j = agent;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << '\n';
}

inline DdpgAgent load_agent(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  in >> j;
  TrainConfig cfg;
  const auto& jc = j.at("config");
  cfg.gamma = jc.at("gamma").get<double>();
  cfg.minibatch = jc.at("minibatch").get<std::size_t>();
  cfg.tau = jc.at("tau").get<double>();
  cfg.noise_std = jc.at("noise_std").get<double>();
  cfg.actor_lr = jc.at("actor_lr").get<double>();
  cfg.critic_lr = jc.at("critic_lr").get<double>();
  cfg.updates_per_step = jc.at("updates_per_step").get<std::size_t>();
  cfg.buffer_capacity = jc.at("buffer_capacity").get<std::size_t>();
  cfg.hidden = jc.at("hidden").get<std::size_t>();
  const std::size_t state_dim = j.at("state_dim").get<std::size_t>();
  const double l_high = j.at("normalization").at("deadline_scale").get<double>();
  DdpgAgent agent(state_dim - 1, l_high, cfg, 1);
  agent.actor_ = j.at("actor").get<Mlp>();
  agent.critic_ = j.at("critic").get<Mlp>();
  agent.actor_target_ = j.at("actor_target").get<Mlp>();
  agent.critic_target_ = j.at("critic_target").get<Mlp>();
  if (agent.actor_.input_dim() != state_dim ||
      agent.critic_.input_dim() != state_dim + 2)
    throw std::invalid_argument("checkpoint: network shapes do not match manifest");
  return agent;
}

}  // namespace coinfer
