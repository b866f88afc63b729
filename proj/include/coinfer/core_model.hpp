#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace coinfer {

// Execution profile of a DNN cut into N sequential sub-tasks.
//
//   work[n-1]        A_n, work units of sub-task n (n = 1..N)
//   data_bits[n]     B_n, output size of sub-task n in bits; data_bits[0]
//                    is the raw input fed to sub-task 1
//   latency[n-1][b-1] F_n(b), seconds the edge needs for a batch of b
//                    copies of sub-task n; nondecreasing in b, F_n(0) = 0
struct DnnProfile {
  std::vector<double> work;
  std::vector<double> data_bits;
  std::vector<std::vector<double>> latency;

  std::size_t subtasks() const { return work.size(); }
  std::size_t max_batch() const { return latency.empty() ? 0 : latency.front().size(); }

  double total_work() const {
    double a = 0.0;
    for (double w : work) a += w;
    return a;
  }

  void check() const {
    const std::size_t n = subtasks();
    if (n == 0) throw std::invalid_argument("profile: no sub-tasks");
    if (data_bits.size() != n + 1)
      throw std::invalid_argument("profile: data_bits must have N+1 entries");
    if (latency.size() != n)
      throw std::invalid_argument("profile: latency must have N rows");
    const std::size_t bmax = latency.front().size();
    if (bmax == 0) throw std::invalid_argument("profile: empty latency row");
    for (std::size_t i = 0; i < n; ++i) {
      if (work[i] <= 0.0) throw std::invalid_argument("profile: work must be positive");
      if (latency[i].size() != bmax)
        throw std::invalid_argument("profile: ragged latency table");
      if (latency[i][0] <= 0.0)
        throw std::invalid_argument("profile: F_n(1) must be positive");
      for (std::size_t b = 1; b < bmax; ++b)
        if (latency[i][b] < latency[i][b - 1])
          throw std::invalid_argument("profile: F_n(b) must be nondecreasing in b");
    }
    for (double bits : data_bits)
      if (bits < 0.0) throw std::invalid_argument("profile: negative data size");
  }
};

// Per-user device and link parameters.
struct UserSpec {
  double f_min = 0.0;       // work units / s
  double f_max = 1.0;
  double kappa = 0.0;       // J * s^2 per work unit (energy = kappa * A * f^2)
  double alpha = 1.0;       // s per work unit at f_max (= 1 / f_max)
  double rate_up = 1.0;     // bit/s
  double rate_down = 1.0;
  double power_up = 0.0;    // W while transmitting
  double power_down = 0.0;
  double arrival = 0.0;     // t_{m,0}, release time of the task in seconds
};

struct EdgeSpec {
  double power = 300.0;       // W while a batch is running
  double efficiency = 48.75;  // work units per joule
};

struct Scenario {
  DnnProfile profile;
  std::vector<UserSpec> users;
  std::vector<double> deadline;  // l_m, absolute seconds

  std::size_t n_users() const { return users.size(); }

  void check() const {
    profile.check();
    if (deadline.size() != users.size())
      throw std::invalid_argument("scenario: one deadline per user required");
    // Solvers may batch every user together, so the latency table has to
    // reach that far.
    if (profile.max_batch() < users.size())
      throw std::invalid_argument("scenario: latency table shorter than user count");
    for (std::size_t m = 0; m < users.size(); ++m) {
      const UserSpec& u = users[m];
      if (u.f_max <= 0.0 || u.f_min < 0.0 || u.f_min > u.f_max)
        throw std::invalid_argument("scenario: bad frequency range");
      if (u.kappa < 0.0) throw std::invalid_argument("scenario: negative kappa");
      if (u.rate_up <= 0.0 || u.rate_down <= 0.0)
        throw std::invalid_argument("scenario: rates must be positive");
      if (u.power_up < 0.0 || u.power_down < 0.0)
        throw std::invalid_argument("scenario: negative link power");
      if (u.arrival < 0.0) throw std::invalid_argument("scenario: negative arrival");
      if (deadline[m] <= u.arrival)
        throw std::invalid_argument("scenario: deadline before arrival");
    }
  }
};

inline double local_latency(double work, double f) {
  if (f <= 0.0) throw std::domain_error("local_latency: f must be positive");
  return work / f;
}

inline double local_energy(double kappa, double work, double f) {
  if (kappa < 0.0 || work < 0.0 || f < 0.0)
    throw std::domain_error("local_energy: negative input");
  return kappa * work * f * f;
}

struct LinkCost {
  double latency;  // s
  double energy;   // J
};

inline LinkCost link_cost(double bits, double rate, double power) {
  if (rate <= 0.0) throw std::domain_error("link_cost: rate must be positive");
  if (bits < 0.0 || power < 0.0) throw std::domain_error("link_cost: negative input");
  const double lat = bits / rate;
  return {lat, lat * power};
}

// F_n(b). n is 1-based, b = 0 means no batch (latency 0), b past the table
// is a hard error rather than an extrapolation.
inline double edge_batch_latency(const DnnProfile& p, std::size_t n, std::size_t b) {
  if (n < 1 || n > p.subtasks())
    throw std::out_of_range("edge_batch_latency: sub-task index");
  if (b == 0) return 0.0;
  if (b > p.max_batch())
    throw std::out_of_range("edge_batch_latency: batch size beyond table");
  return p.latency[n - 1][b - 1];
}

struct DeviceCalibration {
  double f_max;
  double kappa;
};

// Work units are chosen so that A_n equals F_n(1); a device that is alpha
// times slower than the edge then has f_max = 1/alpha.  rho is the ratio of
// edge to device energy efficiency; kappa = rho * P_e * alpha^2 makes the
// device at f_max burn rho times the edge power-per-work-unit.
inline DeviceCalibration calibrate_device(double alpha, double rho, const EdgeSpec& edge) {
  if (alpha <= 0.0) throw std::domain_error("calibrate_device: alpha must be positive");
  if (rho <= 0.0) throw std::domain_error("calibrate_device: rho must be positive");
  return {1.0 / alpha, rho * edge.power * alpha * alpha};
}

}  // namespace coinfer
