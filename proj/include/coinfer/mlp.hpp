#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace coinfer {

struct DenseLayer {
  std::size_t in = 0, out = 0;
  std::vector<double> w;   // row-major, w[o * in + i]
  std::vector<double> b;
  std::vector<double> gw;  // accumulated gradients, same layout
  std::vector<double> gb;
};

// Three affine layers: two rectifier hidden layers of equal width and an
// output layer that is either linear (critic) or saturating (actor, tanh
// into [-1, 1]).  Hidden layers draw from U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// the output layer from U(-3e-3, 3e-3) so initial outputs sit near zero.
class Mlp {
 public:
  enum class Output { Linear, Bounded };

  Mlp() = default;

  Mlp(std::size_t in, std::size_t out, Output kind, std::uint64_t seed,
      std::size_t hidden = 128)
      : kind_(kind) {
    if (in == 0 || out == 0 || hidden == 0)
      throw std::invalid_argument("mlp: zero layer width");
    std::mt19937_64 rng(seed);
    layers_.push_back(make_layer(in, hidden, rng, false));
    layers_.push_back(make_layer(hidden, hidden, rng, false));
    layers_.push_back(make_layer(hidden, out, rng, true));
  }

  std::size_t input_dim() const { return layers_.front().in; }
  std::size_t output_dim() const { return layers_.back().out; }
  Output output_kind() const { return kind_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  // Per-layer pre-activations and activations kept for the backward pass.
  struct Tape {
    std::vector<double> x;
    std::vector<std::vector<double>> z;
    std::vector<std::vector<double>> a;
  };

  std::vector<double> forward(const std::vector<double>& x,
                              Tape* tape = nullptr) const {
    if (x.size() != input_dim()) throw std::invalid_argument("mlp: input size");
    if (tape) {
      tape->x = x;
      tape->z.clear();
      tape->a.clear();
    }
    std::vector<double> cur = x;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const DenseLayer& L = layers_[li];
      std::vector<double> z(L.out);
      for (std::size_t o = 0; o < L.out; ++o) {
        double acc = L.b[o];
        const double* wr = &L.w[o * L.in];
        for (std::size_t i = 0; i < L.in; ++i) acc += wr[i] * cur[i];
        z[o] = acc;
      }
      std::vector<double> a(L.out);
      const bool last = li + 1 == layers_.size();
      for (std::size_t o = 0; o < L.out; ++o)
        a[o] = last ? (kind_ == Output::Bounded ? std::tanh(z[o]) : z[o])
                    : std::max(z[o], 0.0);
      if (tape) {
        tape->z.push_back(z);
        tape->a.push_back(a);
      }
      cur = std::move(a);
    }
    for (double v : cur)
      if (!std::isfinite(v)) throw std::runtime_error("mlp: non-finite output");
    return cur;
  }

  // Accumulates parameter gradients for the scalar loss whose derivative
  // with respect to the outputs is dy; returns the derivative with respect
  // to the inputs.
  std::vector<double> backward(const Tape& tape, std::vector<double> dy) {
    if (dy.size() != output_dim()) throw std::invalid_argument("mlp: grad size");
    for (std::size_t li = layers_.size(); li-- > 0;) {
      DenseLayer& L = layers_[li];
      const bool last = li + 1 == layers_.size();
      std::vector<double> dz(L.out);
      for (std::size_t o = 0; o < L.out; ++o) {
        if (last) {
          dz[o] = kind_ == Output::Bounded
                      ? dy[o] * (1.0 - tape.a[li][o] * tape.a[li][o])
                      : dy[o];
        } else {
          dz[o] = tape.z[li][o] > 0.0 ? dy[o] : 0.0;
        }
      }
      const std::vector<double>& prev = li == 0 ? tape.x : tape.a[li - 1];
      for (std::size_t o = 0; o < L.out; ++o) {
        const double g = dz[o];
        double* gw = &L.gw[o * L.in];
        for (std::size_t i = 0; i < L.in; ++i) gw[i] += g * prev[i];
        L.gb[o] += g;
      }
      std::vector<double> dx(L.in, 0.0);
      for (std::size_t o = 0; o < L.out; ++o) {
        const double g = dz[o];
        const double* wr = &L.w[o * L.in];
        for (std::size_t i = 0; i < L.in; ++i) dx[i] += wr[i] * g;
      }
      dy = std::move(dx);
    }
    return dy;
  }

  void zero_grad() {
    for (DenseLayer& L : layers_) {
      std::fill(L.gw.begin(), L.gw.end(), 0.0);
      std::fill(L.gb.begin(), L.gb.end(), 0.0);
    }
  }

  std::size_t n_params() const {
    std::size_t n = 0;
    for (const DenseLayer& L : layers_) n += L.w.size() + L.b.size();
    return n;
  }

 private:
  static DenseLayer make_layer(std::size_t in, std::size_t out,
                               std::mt19937_64& rng, bool final_layer) {
    const double bound = final_layer ? 3e-3 : 1.0 / std::sqrt(double(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer L;
    L.in = in;
    L.out = out;
    L.w.resize(in * out);
    L.b.resize(out);
    for (double& v : L.w) v = u(rng);
    for (double& v : L.b) v = u(rng);
    L.gw.assign(in * out, 0.0);
    L.gb.assign(out, 0.0);
    return L;
  }

  Output kind_ = Output::Linear;
  std::vector<DenseLayer> layers_;
};

// Adaptive-moment optimizer over a network's accumulated gradients.
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  std::vector<double> m, v;

  explicit Adam(double lr_) : lr(lr_) {}

  void step(Mlp& net) {
    if (m.empty()) {
      m.assign(net.n_params(), 0.0);
      v.assign(net.n_params(), 0.0);
    }
    if (m.size() != net.n_params())
      throw std::invalid_argument("adam: network shape changed");
    ++t;
    const double c1 = 1.0 - std::pow(beta1, double(t));
    const double c2 = 1.0 - std::pow(beta2, double(t));
    std::size_t k = 0;
    for (DenseLayer& L : net.layers()) {
      auto update = [&](double& p, double g) {
        m[k] = beta1 * m[k] + (1.0 - beta1) * g;
        v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
        p -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
        ++k;
      };
      for (std::size_t i = 0; i < L.w.size(); ++i) update(L.w[i], L.gw[i]);
      for (std::size_t i = 0; i < L.b.size(); ++i) update(L.b[i], L.gb[i]);
    }
  }
};

// theta_target <- (1 - tau) * theta_target + tau * theta
inline void soft_update(Mlp& target, const Mlp& net, double tau) {
  if (target.n_params() != net.n_params())
    throw std::invalid_argument("soft_update: mismatched networks");
  for (std::size_t li = 0; li < target.layers().size(); ++li) {
    DenseLayer& T = target.layers()[li];
    const DenseLayer& S = net.layers()[li];
    for (std::size_t i = 0; i < T.w.size(); ++i)
      T.w[i] = (1.0 - tau) * T.w[i] + tau * S.w[i];
    for (std::size_t i = 0; i < T.b.size(); ++i)
      T.b[i] = (1.0 - tau) * T.b[i] + tau * S.b[i];
  }
}

inline void to_json(nlohmann::json& j, const Mlp& net) {
  j["output"] = net.output_kind() == Mlp::Output::Bounded ? "bounded" : "linear";
  j["layers"] = nlohmann::json::array();
  for (const DenseLayer& L : net.layers())
    j["layers"].push_back({{"in", L.in}, {"out", L.out}, {"w", L.w}, {"b", L.b}});
}

inline void from_json(const nlohmann::json& j, Mlp& net) {
  const std::string kind = j.at("output").get<std::string>();
  const auto& jl = j.at("layers");
  if (jl.size() != 3) throw std::invalid_argument("mlp: expected three layers");
  const std::size_t in = jl[0].at("in").get<std::size_t>();
  const std::size_t hidden = jl[0].at("out").get<std::size_t>();
  const std::size_t out = jl[2].at("out").get<std::size_t>();
  net = Mlp(in, out, kind == "bounded" ? Mlp::Output::Bounded : Mlp::Output::Linear,
            0, hidden);
  for (std::size_t li = 0; li < 3; ++li) {
    DenseLayer& L = net.layers()[li];
    if (jl[li].at("in").get<std::size_t>() != L.in ||
        jl[li].at("out").get<std::size_t>() != L.out)
      throw std::invalid_argument("mlp: inconsistent layer shapes");
    L.w = jl[li].at("w").get<std::vector<double>>();
    L.b = jl[li].at("b").get<std::vector<double>>();
    if (L.w.size() != L.in * L.out || L.b.size() != L.out)
      throw std::invalid_argument("mlp: parameter array sizes");
  }
}

}  // namespace coinfer
