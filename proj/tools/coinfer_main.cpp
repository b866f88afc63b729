// Experiment driver: offline solver sweeps, online policy runs, and
// manifest-based reruns.  All randomness descends from the --seed flag, so a
// rerun from a manifest reproduces every CSV byte for byte.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <coinfer/ddpg.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using coinfer::detail::fmt_g17;
using coinfer::detail::mix64;

constexpr const char* kRevisionEnv = "COINFER_REVISION";

std::string revision_string() {
  const char* rev = std::getenv(kRevisionEnv);
  return rev && *rev ? rev : "unversioned";
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Seed tree: one root, one branch per component, one leaf per index.
std::uint64_t sub_seed(std::uint64_t root, std::uint64_t component,
                       std::uint64_t index) {
  return mix64(mix64(root ^ (component * 0x9e3779b97f4a7c15ull)) + index);
}

std::string join_semicolon(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += fmt_g17(v[i]);
  }
  return s;
}

// Quotes a CSV field only when its content demands it (RFC 4180).
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Config plumbing.  Flag values land in a JSON object; a --config file then
// overrides whatever it names, and the merged object is what the manifest
// records.

json default_offline_config() {
  json j;
  j["command"] = "offline";
  j["profile"] = "heavy";
  j["scenario"] = "";
  j["users"] = 15;
  j["bandwidth"] = 1e6;
  j["alpha"] = 1.0;
  j["deadline"] = 0.25;
  j["cell_radius"] = 100.0;
  j["shadow_sigma_db"] = 8.0;
  j["device_efficiency"] = 48.75;
  j["sweep"] = json::object();
  j["solvers"] = json::array({"LC", "PS", "FIFO", "IPSSA", "IPSSA_NP"});
  j["seeds"] = 1;
  j["seed"] = 1;
  j["validate_rate"] = 0.01;
  j["hist_bins"] = 20;
  j["out"] = "runs/offline";
  return j;
}

json default_online_config() {
  json j;
  j["command"] = "online";
  j["profile"] = "light";
  j["scenario"] = "";
  j["users"] = 6;
  j["bandwidth"] = 1e6;
  j["alpha"] = 1.0;
  j["cell_radius"] = 100.0;
  j["shadow_sigma_db"] = 8.0;
  j["device_efficiency"] = 48.75;
  j["policy"] = "TW(2,OG)";
  j["episodes"] = 200;
  j["eval_episodes"] = 20;
  j["horizon"] = 200;
  j["slot"] = 0.025;
  j["arrival"] = "bernoulli";
  j["arrival_p"] = 0.25;
  j["l_low"] = 0.25;
  j["l_high"] = 1.0;
  j["seed"] = 1;
  j["out"] = "runs/online";
  const coinfer::TrainConfig t;
  j["train"] = {{"gamma", t.gamma},
                {"minibatch", t.minibatch},
                {"tau", t.tau},
                {"noise_std", t.noise_std},
                {"actor_lr", t.actor_lr},
                {"critic_lr", t.critic_lr},
                {"updates_per_step", t.updates_per_step},
                {"buffer_capacity", t.buffer_capacity},
                {"hidden", t.hidden}};
  return j;
}

void merge_config_file(json& cfg, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  json file;
  in >> file;
  for (auto it = file.begin(); it != file.end(); ++it) cfg[it.key()] = it.value();
}

coinfer::ScenarioConfig scenario_config_from(const json& cfg, std::size_t users,
                                             double bandwidth, double alpha,
                                             coinfer::DeadlineSpec deadline) {
  coinfer::ScenarioConfig sc;
  sc.users = users;
  sc.bandwidth = bandwidth;
  sc.alpha = alpha;
  sc.deadline = deadline;
  sc.cell_radius = cfg.at("cell_radius").get<double>();
  sc.shadow_sigma_db = cfg.at("shadow_sigma_db").get<double>();
  sc.device_efficiency = cfg.at("device_efficiency").get<double>();
  return sc;
}

coinfer::DnnProfile resolve_profile(const std::string& name, std::size_t b_max) {
  coinfer::DnnProfile p;
  if (name == "heavy") {
    p = coinfer::profile_heavy(std::max<std::size_t>(b_max, 1));
  } else if (name == "light") {
    p = coinfer::profile_light(std::max<std::size_t>(b_max, 1));
  } else {
    p = coinfer::load_profile(name);
  }
  if (p.max_batch() < b_max)
    throw std::domain_error("profile " + name + " caps batches at " +
                            std::to_string(p.max_batch()) + ", need " +
                            std::to_string(b_max));
  return p;
}

struct SolverTimer {
  std::map<std::string, std::pair<std::size_t, double>> acc;

  template <class F>
  auto time(const std::string& key, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto result = f();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    auto& slot = acc[key];
    ++slot.first;
    slot.second += dt.count();
    return result;
  }

  json to_json() const {
    json j = json::object();
    for (const auto& [key, v] : acc)
      j[key] = {{"calls", v.first},
                {"total_s", v.second},
                {"mean_s", v.first ? v.second / double(v.first) : 0.0}};
    return j;
  }
};

void write_manifest(const json& cfg, const std::vector<std::string>& outputs,
                    const SolverTimer& timer, const std::string& out_dir) {
  json m;
  m["command"] = cfg.at("command");
  m["config"] = cfg;
  m["config_hash"] = fnv1a_hex(cfg.dump());
  m["seed"] = cfg.at("seed");
  m["revision"] = revision_string();
  m["out_dir"] = out_dir;
  m["outputs"] = outputs;
  m["timings"] = timer.to_json();
  std::ofstream out(out_dir + "/manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + out_dir);
  out << m.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Offline sweeps.

struct SolverRun {
  coinfer::Schedule schedule;
  double energy = 0.0;
};

SolverRun run_offline_solver(const std::string& name, const coinfer::Scenario& sc) {
  using coinfer::BaselineMode;
  if (name == "IPSSA") {
    double l = sc.deadline[0];
    for (double d : sc.deadline) l = std::min(l, d);
    coinfer::SolveResult r = coinfer::ip_ssa(sc, l);
    return {std::move(r.schedule), r.energy};
  }
  if (name == "OG") {
    coinfer::GroupingPlan p = coinfer::og(sc);
    return {std::move(p.schedule), p.energy};
  }
  BaselineMode mode;
  if (name == "LC")
    mode = BaselineMode::LC;
  else if (name == "PS")
    mode = BaselineMode::PS;
  else if (name == "FIFO")
    mode = BaselineMode::FIFO;
  else if (name == "IPSSA_NP")
    mode = BaselineMode::IPSSA_NP;
  else
    throw std::invalid_argument("unknown solver " + name);
  coinfer::SolveResult r = coinfer::baseline(sc, mode);
  return {std::move(r.schedule), r.energy};
}

std::vector<double> sweep_values(const json& cfg, const char* key,
                                 double fallback) {
  const json& sweep = cfg.at("sweep");
  if (!sweep.contains(key)) return {fallback};
  std::vector<double> v = sweep.at(key).get<std::vector<double>>();
  if (v.empty())
    throw std::invalid_argument(std::string("empty sweep range for ") + key);
  return v;
}

int exec_offline(const json& cfg) {
  const std::string out_dir = cfg.at("out").get<std::string>();
  fs::create_directories(out_dir);
  const std::uint64_t root = cfg.at("seed").get<std::uint64_t>();
  const std::size_t reps = cfg.at("seeds").get<std::size_t>();
  if (reps == 0) throw std::invalid_argument("seeds must be >= 1");
  const double vrate = cfg.at("validate_rate").get<double>();
  if (vrate < 0.0 || vrate > 1.0)
    throw std::invalid_argument("validate_rate outside [0, 1]");

  const std::vector<double> Ms =
      sweep_values(cfg, "M", double(cfg.at("users").get<std::size_t>()));
  const std::vector<double> Ws = sweep_values(cfg, "W", cfg.at("bandwidth"));
  const std::vector<double> As = sweep_values(cfg, "alpha", cfg.at("alpha"));
  const std::vector<double> Ls = sweep_values(cfg, "l", cfg.at("deadline"));
  for (double m : Ms)
    if (m < 1.0 || m != std::floor(m))
      throw std::invalid_argument("sweep M values must be positive integers");

  const std::string scen_path = cfg.at("scenario").get<std::string>();
  const bool swept_scenario = cfg.at("sweep").contains("M") ||
                              cfg.at("sweep").contains("W") ||
                              cfg.at("sweep").contains("alpha");
  if (!scen_path.empty() && swept_scenario)
    throw std::invalid_argument(
        "a fixed --scenario file cannot be combined with M/W/alpha sweeps");

  std::size_t max_m = 0;
  for (double m : Ms) max_m = std::max(max_m, std::size_t(m));
  coinfer::DnnProfile profile;
  coinfer::GeneratedScenario fixed_scenario;
  if (scen_path.empty()) {
    profile = resolve_profile(cfg.at("profile").get<std::string>(), max_m);
  } else {
    fixed_scenario = coinfer::load_scenario(scen_path);
    if (fixed_scenario.scenario.profile.max_batch() <
        fixed_scenario.scenario.n_users())
      throw std::domain_error("scenario profile cannot batch all of its users");
  }

  const std::vector<std::string> solvers =
      cfg.at("solvers").get<std::vector<std::string>>();
  if (solvers.empty()) throw std::invalid_argument("no solvers selected");

  std::mt19937_64 vrng(sub_seed(root, 2, 0));
  std::bernoulli_distribution vpick(vrate);
  SolverTimer timer;

  std::ostringstream rows, summary, hist;
  rows << "M,W,alpha,l,solver,mean_energy_per_user,per_user_energies,"
          "avg_batch_size_per_subtask\n";
  summary << "M,W,alpha,l,solver,mean_energy_per_user_mean,"
             "mean_energy_per_user_std,seeds\n";
  hist << "M,W,alpha,l,solver,bin_lo,bin_hi,count\n";
  const std::size_t bins = cfg.at("hist_bins").get<std::size_t>();
  if (bins == 0) throw std::invalid_argument("hist_bins must be >= 1");

  std::size_t point = 0;
  for (double Md : Ms)
    for (double W : Ws)
      for (double A : As)
        for (double L : Ls) {
          const std::size_t M = std::size_t(Md);
          // One scenario per seed replicate, shared by every solver so the
          // energy columns compare like for like.
          std::vector<coinfer::Scenario> scen;
          for (std::size_t r = 0; r < reps; ++r) {
            if (!scen_path.empty()) {
              coinfer::Scenario sc = fixed_scenario.scenario;
              if (cfg.at("sweep").contains("l")) sc.deadline.assign(sc.n_users(), L);
              scen.push_back(std::move(sc));
            } else {
              const coinfer::ScenarioConfig sc_cfg = scenario_config_from(
                  cfg, M, W, A, coinfer::DeadlineSpec::fixed(L));
              std::mt19937_64 rng(sub_seed(root, 1, point * 1000003 + r));
              scen.push_back(
                  coinfer::sample_scenario(sc_cfg, profile, rng).scenario);
            }
          }
          for (const std::string& solver : solvers) {
            std::vector<double> means;
            std::vector<double> pooled;
            for (std::size_t r = 0; r < reps; ++r) {
              const coinfer::Scenario& sc = scen[r];
              const SolverRun run = timer.time(
                  solver, [&] { return run_offline_solver(solver, sc); });
              if (vpick(vrng)) {
                const std::vector<coinfer::Violation> errs =
                    coinfer::validate(run.schedule, sc);
                if (!errs.empty()) {
                  std::cerr << "validation failure (" << solver << ", M=" << M
                            << "): " << errs.front().constraint_id << "\n";
                  return 3;
                }
              }
              const coinfer::ScheduleMetrics met =
                  coinfer::schedule_metrics(run.schedule, sc);
              const double mean_epu = met.total_energy / double(sc.n_users());
              means.push_back(mean_epu);
              pooled.insert(pooled.end(), met.per_user_energy.begin(),
                            met.per_user_energy.end());
              double l_col = L;
              if (!scen_path.empty() && !cfg.at("sweep").contains("l")) {
                l_col = sc.deadline[0];
                for (double d : sc.deadline) l_col = std::min(l_col, d);
              }
              rows << sc.n_users() << ',' << fmt_g17(W) << ',' << fmt_g17(A)
                   << ',' << fmt_g17(l_col) << ',' << solver << ','
                   << fmt_g17(mean_epu) << ','
                   << join_semicolon(met.per_user_energy) << ','
                   << join_semicolon(met.mean_batch_size) << '\n';
            }
            double mean = 0.0;
            for (double v : means) mean += v;
            mean /= double(means.size());
            double var = 0.0;
            for (double v : means) var += (v - mean) * (v - mean);
            const double sd = std::sqrt(var / double(means.size()));
            summary << M << ',' << fmt_g17(W) << ',' << fmt_g17(A) << ','
                    << fmt_g17(L) << ',' << solver << ',' << fmt_g17(mean)
                    << ',' << fmt_g17(sd) << ',' << reps << '\n';

            double lo = pooled[0], hi = pooled[0];
            for (double v : pooled) {
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
            if (hi == lo) {
              hist << M << ',' << fmt_g17(W) << ',' << fmt_g17(A) << ','
                   << fmt_g17(L) << ',' << solver << ',' << fmt_g17(lo) << ','
                   << fmt_g17(hi) << ',' << pooled.size() << '\n';
            } else {
              const double w = (hi - lo) / double(bins);
              for (std::size_t b = 0; b < bins; ++b) {
                const double b_lo = lo + double(b) * w;
                const double b_hi = b + 1 == bins ? hi : lo + double(b + 1) * w;
                std::size_t count = 0;
                for (double v : pooled)
                  count += b + 1 == bins ? (v >= b_lo && v <= b_hi)
                                         : (v >= b_lo && v < b_hi);
                hist << M << ',' << fmt_g17(W) << ',' << fmt_g17(A) << ','
                     << fmt_g17(L) << ',' << solver << ',' << fmt_g17(b_lo)
                     << ',' << fmt_g17(b_hi) << ',' << count << '\n';
              }
            }
          }
          ++point;
        }

  for (const auto& [name, text] :
       {std::pair<std::string, const std::ostringstream*>{"offline.csv", &rows},
        {"offline_summary.csv", &summary},
        {"offline_hist.csv", &hist}}) {
    std::ofstream out(out_dir + "/" + name);
    if (!out) throw std::runtime_error("cannot write " + out_dir + "/" + name);
    out << text->str();
  }
  write_manifest(cfg, {"offline.csv", "offline_summary.csv", "offline_hist.csv"},
                 timer, out_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// Online runs.

struct PolicySpec {
  enum class Kind { LC, TW, DDPG };
  Kind kind = Kind::TW;
  std::size_t window = 2;
  coinfer::OnlineSolver solver = coinfer::OnlineSolver::OG;
  std::string name;
};

PolicySpec parse_policy(const std::string& text) {
  PolicySpec p;
  p.name = text;
  if (text == "LC") {
    p.kind = PolicySpec::Kind::LC;
    return p;
  }
  if (text == "DDPG-OG" || text == "DDPG-IPSSA") {
    p.kind = PolicySpec::Kind::DDPG;
    p.solver = text == "DDPG-OG" ? coinfer::OnlineSolver::OG
                                 : coinfer::OnlineSolver::IPSSA;
    return p;
  }
  if (text.rfind("TW(", 0) == 0 && text.back() == ')') {
    const std::vector<std::string> parts =
        split(text.substr(3, text.size() - 4), ',');
    if (parts.size() == 2) {
      p.kind = PolicySpec::Kind::TW;
      std::size_t pos = 0;
      const unsigned long w = std::stoul(parts[0], &pos);
      if (pos != parts[0].size()) throw std::invalid_argument("bad TW window");
      p.window = w;
      if (parts[1] == "OG")
        p.solver = coinfer::OnlineSolver::OG;
      else if (parts[1] == "IPSSA")
        p.solver = coinfer::OnlineSolver::IPSSA;
      else
        throw std::invalid_argument("TW solver must be IPSSA or OG");
      return p;
    }
  }
  throw std::invalid_argument(
      "unknown policy " + text + "; expected LC, TW(k,IPSSA|OG), DDPG-IPSSA or DDPG-OG");
}

int exec_online(const json& cfg) {
  const std::string out_dir = cfg.at("out").get<std::string>();
  fs::create_directories(out_dir);
  const std::uint64_t root = cfg.at("seed").get<std::uint64_t>();

  coinfer::ArrivalModel arr;
  const std::string arrival = cfg.at("arrival").get<std::string>();
  if (arrival == "bernoulli")
    arr.kind = coinfer::ArrivalModel::Kind::Bernoulli;
  else if (arrival == "immediate")
    arr.kind = coinfer::ArrivalModel::Kind::Immediate;
  else
    throw std::invalid_argument("arrival must be bernoulli or immediate");
  arr.p_arrive = cfg.at("arrival_p").get<double>();
  arr.l_low = cfg.at("l_low").get<double>();
  arr.l_high = cfg.at("l_high").get<double>();

  const PolicySpec pol = parse_policy(cfg.at("policy").get<std::string>());

  coinfer::Scenario sc;
  const std::string scen_path = cfg.at("scenario").get<std::string>();
  if (!scen_path.empty()) {
    sc = coinfer::load_scenario(scen_path).scenario;
  } else {
    const std::size_t users = cfg.at("users").get<std::size_t>();
    const coinfer::DnnProfile profile =
        resolve_profile(cfg.at("profile").get<std::string>(), users);
    const coinfer::ScenarioConfig sc_cfg = scenario_config_from(
        cfg, users, cfg.at("bandwidth").get<double>(),
        cfg.at("alpha").get<double>(), coinfer::DeadlineSpec::fixed(arr.l_high));
    std::mt19937_64 rng(sub_seed(root, 1, 0));
    sc = coinfer::sample_scenario(sc_cfg, profile, rng).scenario;
  }
  const std::size_t M = sc.n_users();

  coinfer::OnlineEnv env(sc, arr, pol.solver, cfg.at("slot").get<double>(),
                         sub_seed(root, 3, 0));

  const std::size_t horizon = cfg.at("horizon").get<std::size_t>();
  const std::size_t eval_episodes = cfg.at("eval_episodes").get<std::size_t>();
  if (horizon == 0 || eval_episodes == 0)
    throw std::invalid_argument("horizon and eval_episodes must be >= 1");

  SolverTimer timer;
  std::vector<std::string> outputs = {"online.csv"};
  std::unique_ptr<coinfer::DdpgAgent> agent;
  if (pol.kind == PolicySpec::Kind::DDPG) {
    const json& jt = cfg.at("train");
    coinfer::TrainConfig tc;
    tc.gamma = jt.at("gamma").get<double>();
    tc.minibatch = jt.at("minibatch").get<std::size_t>();
    tc.tau = jt.at("tau").get<double>();
    tc.noise_std = jt.at("noise_std").get<double>();
    tc.actor_lr = jt.at("actor_lr").get<double>();
    tc.critic_lr = jt.at("critic_lr").get<double>();
    tc.updates_per_step = jt.at("updates_per_step").get<std::size_t>();
    tc.buffer_capacity = jt.at("buffer_capacity").get<std::size_t>();
    tc.hidden = jt.at("hidden").get<std::size_t>();
    agent = std::make_unique<coinfer::DdpgAgent>(M, arr.l_high, tc,
                                                 sub_seed(root, 4, 0));
    coinfer::TrainOptions opt;
    opt.episodes = cfg.at("episodes").get<std::size_t>();
    opt.horizon = horizon;
    opt.seed = sub_seed(root, 3, 1);
    const std::vector<coinfer::CurvePoint> curve =
        timer.time("train", [&] { return coinfer::train_ddpg(env, *agent, opt); });
    coinfer::write_training_curve(curve, out_dir + "/curve.csv");
    coinfer::save_agent(*agent, out_dir + "/agent.json");
    outputs.push_back("curve.csv");
    outputs.push_back("agent.json");
  }

  std::ostringstream rows;
  rows << "policy,episode,slots,total_energy,total_forced_cost,total_reward,"
          "forced_count,solver_calls,mean_tasks_per_call,mean_tasks_per_group,"
          "mean_batch_size,energy_per_user_slot\n";
  for (std::size_t ep = 0; ep < eval_episodes; ++ep) {
    coinfer::PolicyFn policy;
    switch (pol.kind) {
      case PolicySpec::Kind::LC:
        policy = coinfer::local_policy();
        break;
      case PolicySpec::Kind::TW:
        policy = coinfer::TimeWindowPolicy(pol.window, arr.l_high);
        break;
      case PolicySpec::Kind::DDPG:
        policy = coinfer::agent_policy(*agent);
        break;
    }
    const coinfer::EpisodeMetrics m = timer.time("eval", [&] {
      return coinfer::run_episode(env, policy, horizon, sub_seed(root, 5, ep));
    });
    rows << csv_field(pol.name) << ',' << ep << ',' << m.slots << ','
         << fmt_g17(m.total_energy) << ',' << fmt_g17(m.total_forced_cost)
         << ',' << fmt_g17(m.total_reward) << ',' << m.forced_count << ','
         << m.solver_calls << ',' << fmt_g17(m.mean_tasks_per_call()) << ','
         << fmt_g17(m.mean_tasks_per_group()) << ','
         << fmt_g17(m.mean_batch_size()) << ','
         << fmt_g17((m.total_energy + m.total_forced_cost) /
                    (double(M) * double(m.slots)))
         << '\n';
  }
  std::ofstream out(out_dir + "/online.csv");
  if (!out) throw std::runtime_error("cannot write " + out_dir + "/online.csv");
  out << rows.str();

  write_manifest(cfg, outputs, timer, out_dir);
  return 0;
}

int exec_rerun(const std::string& manifest_path, const std::string& out_override) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot read manifest " + manifest_path);
  json m;
  in >> m;
  json cfg = m.at("config");
  if (!out_override.empty()) cfg["out"] = out_override;
  const std::string command = m.at("command").get<std::string>();
  if (command == "offline") return exec_offline(cfg);
  if (command == "online") return exec_online(cfg);
  throw std::invalid_argument("manifest names unknown command " + command);
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const std::domain_error& e) {
    std::cerr << "infeasible configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << "validation failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-user device-edge co-inference experiment driver"};
  app.require_subcommand(1);

  struct {
    std::string profile, scenario, config, out, solvers;
    std::vector<std::string> sweep;
    std::uint64_t seed = 0;
    std::size_t users = 0, seeds = 0;
    double bandwidth = 0, alpha = 0, deadline = 0, validate_rate = 0;
  } of;
  CLI::App* off = app.add_subcommand(
      "offline", "sweep offline solvers over sampled scenarios");
  CLI::Option* of_profile = off->add_option(
      "--profile", of.profile, "builtin profile (heavy|light) or profile CSV path");
  CLI::Option* of_scenario =
      off->add_option("--scenario", of.scenario, "fixed scenario JSON path");
  CLI::Option* of_solver = off->add_option(
      "--solver", of.solvers, "comma-separated: LC,PS,FIFO,IPSSA,IPSSA_NP,OG");
  CLI::Option* of_seed = off->add_option("--seed", of.seed, "root seed");
  CLI::Option* of_seeds =
      off->add_option("--seeds", of.seeds, "seed replicates per sweep point");
  CLI::Option* of_users = off->add_option("--users", of.users, "user count M");
  CLI::Option* of_bw = off->add_option("--bandwidth", of.bandwidth, "uplink Hz");
  CLI::Option* of_alpha = off->add_option("--alpha", of.alpha, "device slowdown");
  CLI::Option* of_l = off->add_option("--deadline", of.deadline, "deadline s");
  CLI::Option* of_vrate = off->add_option("--validate-rate", of.validate_rate,
                                          "schedule spot-check probability");
  CLI::Option* of_out = off->add_option("--out", of.out, "output directory");
  off->add_option("--sweep", of.sweep,
                  "sweep spec key=v1,v2,... with key in {M,W,alpha,l}");
  off->add_option("--config", of.config, "JSON config file; overrides flags");

  struct {
    std::string profile, scenario, config, out, policy, arrival;
    std::uint64_t seed = 0;
    std::size_t users = 0, episodes = 0, eval_episodes = 0, horizon = 0;
    double slot = 0, arrival_p = 0, l_low = 0, l_high = 0;
  } on;
  CLI::App* onl = app.add_subcommand("online", "run a slotted online policy");
  CLI::Option* on_profile = onl->add_option("--profile", on.profile,
                                            "builtin profile or CSV path");
  CLI::Option* on_scenario =
      onl->add_option("--scenario", on.scenario, "fixed scenario JSON path");
  CLI::Option* on_policy = onl->add_option(
      "--policy", on.policy, "LC, TW(k,IPSSA|OG), DDPG-IPSSA or DDPG-OG");
  CLI::Option* on_episodes =
      onl->add_option("--episodes", on.episodes, "training episodes (DDPG)");
  CLI::Option* on_eval = onl->add_option("--eval-episodes", on.eval_episodes,
                                         "evaluation episodes");
  CLI::Option* on_horizon =
      onl->add_option("--horizon", on.horizon, "slots per episode");
  CLI::Option* on_seed = onl->add_option("--seed", on.seed, "root seed");
  CLI::Option* on_users = onl->add_option("--users", on.users, "user count M");
  CLI::Option* on_slot = onl->add_option("--slot", on.slot, "slot length s");
  CLI::Option* on_arrival = onl->add_option("--arrival", on.arrival,
                                            "bernoulli or immediate");
  CLI::Option* on_p =
      onl->add_option("--arrival-p", on.arrival_p, "per-slot arrival probability");
  CLI::Option* on_llow = onl->add_option("--l-low", on.l_low, "deadline draw low");
  CLI::Option* on_lhigh =
      onl->add_option("--l-high", on.l_high, "deadline draw high");
  CLI::Option* on_out = onl->add_option("--out", on.out, "output directory");
  onl->add_option("--config", on.config, "JSON config file; overrides flags");

  std::string rerun_manifest, rerun_out;
  CLI::App* rer = app.add_subcommand("rerun", "reproduce a run from its manifest");
  rer->add_option("manifest", rerun_manifest, "manifest.json path")->required();
  rer->add_option("--out", rerun_out, "override output directory");

  CLI11_PARSE(app, argc, argv);

  if (off->parsed()) {
    return guarded([&] {
      json cfg = default_offline_config();
      if (*of_profile) cfg["profile"] = of.profile;
      if (*of_scenario) cfg["scenario"] = of.scenario;
      if (*of_solver) cfg["solvers"] = split(of.solvers, ',');
      if (*of_seed) cfg["seed"] = of.seed;
      if (*of_seeds) cfg["seeds"] = of.seeds;
      if (*of_users) cfg["users"] = of.users;
      if (*of_bw) cfg["bandwidth"] = of.bandwidth;
      if (*of_alpha) cfg["alpha"] = of.alpha;
      if (*of_l) cfg["deadline"] = of.deadline;
      if (*of_vrate) cfg["validate_rate"] = of.validate_rate;
      if (*of_out) cfg["out"] = of.out;
      for (const std::string& spec : of.sweep) {
        const std::size_t eq = spec.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("sweep spec needs key=values: " + spec);
        const std::string key = spec.substr(0, eq);
        if (key != "M" && key != "W" && key != "alpha" && key != "l")
          throw std::invalid_argument("unknown sweep key " + key);
        std::vector<double> vals;
        for (const std::string& tok : split(spec.substr(eq + 1), ','))
          vals.push_back(std::stod(tok));
        cfg["sweep"][key] = vals;
      }
      merge_config_file(cfg, of.config);
      return exec_offline(cfg);
    });
  }
  if (onl->parsed()) {
    return guarded([&] {
      json cfg = default_online_config();
      if (*on_profile) cfg["profile"] = on.profile;
      if (*on_scenario) cfg["scenario"] = on.scenario;
      if (*on_policy) cfg["policy"] = on.policy;
      if (*on_episodes) cfg["episodes"] = on.episodes;
      if (*on_eval) cfg["eval_episodes"] = on.eval_episodes;
      if (*on_horizon) cfg["horizon"] = on.horizon;
      if (*on_seed) cfg["seed"] = on.seed;
      if (*on_users) cfg["users"] = on.users;
      if (*on_slot) cfg["slot"] = on.slot;
      if (*on_arrival) cfg["arrival"] = on.arrival;
      if (*on_p) cfg["arrival_p"] = on.arrival_p;
      if (*on_llow) cfg["l_low"] = on.l_low;
      if (*on_lhigh) cfg["l_high"] = on.l_high;
      if (*on_out) cfg["out"] = on.out;
      merge_config_file(cfg, on.config);
      return exec_online(cfg);
    });
  }
  return guarded([&] { return exec_rerun(rerun_manifest, rerun_out); });
}
