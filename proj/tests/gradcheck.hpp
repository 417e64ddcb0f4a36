#pragma once

// Finite-difference gradient checks shared by the unit and acceptance suites.

#include "oracles.hpp"

#include "scf/net.hpp"
#include "scf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace scf::gradcheck {

constexpr double kStep = 1e-3;
constexpr double kMaxRelError = 1e-3;
constexpr double kMaxLossError = 1e-4;

inline net::Tensor<double> random_tensor(Rng& rng, int b, int c, int h, int w, double lo = -1.0, double hi = 1.0) {
  net::Tensor<double> t(b, c, h, w);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

inline net::Model<double> random_model(Rng& rng, std::vector<net::LayerSpec> layers, net::InputShape shape) {
  auto m = net::make_model<double>(std::move(layers), shape, rng.next_u64());
  for (auto& p : m.params)
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias[i] = rng.uniform(-0.5, 0.5);
  return m;
}

inline double objective(const net::Model<double>& m, const net::Tensor<double>& x, const net::Tensor<double>& r) {
  return (net::forward(m, x).data() * r.data()).sum();
}

struct FdReport {
  double max_error = 0.0;
  int checked = 0;
};

/// Compares every analytic gradient (weights, biases, input) against central differences.
inline FdReport check_model(net::Model<double>& m, net::Tensor<double>& x, const net::Tensor<double>& r) {
  const auto analytic = net::backward(m, x, r);
  FdReport rep;
  auto f = [&] { return objective(m, x, r); };
  auto record = [&](double a, double n) {
    rep.max_error = std::max(rep.max_error, oracle::relative_error(a, n));
    ++rep.checked;
  };
  for (std::size_t l = 0; l < m.params.size(); ++l) {
    for (Eigen::Index i = 0; i < m.params[l].weight.size(); ++i)
      record(analytic.params[l].weight.data()[i], oracle::central_difference(f, m.params[l].weight.data()[i], kStep));
    for (Eigen::Index i = 0; i < m.params[l].bias.size(); ++i)
      record(analytic.params[l].bias[i], oracle::central_difference(f, m.params[l].bias[i], kStep));
  }
  for (Eigen::Index i = 0; i < x.size(); ++i)
    record(analytic.input_grad.data()[i], oracle::central_difference(f, x.data()[i], kStep));
  return rep;
}

struct SweepReport {
  int accepted = 0;
  int attempts = 0;
  double worst = 0.0;
  std::vector<double> errors;  ///< one per accepted configuration
};

using LayerFactory = std::function<std::vector<net::LayerSpec>(Rng&, int& channels)>;

/// Draws 1 x C x 8 x 8 configurations until `wanted` of them are at least 10 steps
/// away from every kink, and checks each.
inline SweepReport layer_sweep(const std::string& name, int wanted, const LayerFactory& make_layers) {
  Rng rng(derive_seed(0xF1D1, std::hash<std::string>{}(name) & 0xffff));
  SweepReport rep;
  for (; rep.accepted < wanted && rep.attempts < 400 * wanted; ++rep.attempts) {
    int c = 1 + rng.uniform_int(0, 3);
    const int in_c = c;
    auto layers = make_layers(rng, c);
    net::Model<double> m = random_model(rng, layers, {in_c, 8, 8, 0.2});
    net::Tensor<double> x = random_tensor(rng, 1, in_c, 8, 8);
    const auto out = net::forward(m, x);
    net::Tensor<double> r = random_tensor(rng, 1, out.channels(), out.height(), out.width());
    if (oracle::kink_distance(m, x) < 10 * kStep) continue;
    const FdReport one = check_model(m, x, r);
    rep.errors.push_back(one.max_error);
    rep.worst = std::max(rep.worst, one.max_error);
    ++rep.accepted;
  }
  return rep;
}

struct NamedFactory {
  std::string name;
  int wanted;
  LayerFactory make;
};

/// One entry per layer type, plus a small encoder-decoder stack.
inline std::vector<NamedFactory> layer_factories() {
  using net::Conv;
  using net::LayerSpec;
  return {
      {"conv3", 20,
       [](Rng& rng, int& c) {
         const int out = 1 + rng.uniform_int(0, 3);
         std::vector<LayerSpec> l{Conv{3, c, out, true}};
         c = out;
         return l;
       }},
      {"conv1", 20,
       [](Rng& rng, int& c) {
         const int out = 1 + rng.uniform_int(0, 3);
         std::vector<LayerSpec> l{Conv{1, c, out, false}};
         c = out;
         return l;
       }},
      {"pool", 20, [](Rng&, int&) { return std::vector<LayerSpec>{net::MaxPool{}}; }},
      {"up", 20, [](Rng&, int&) { return std::vector<LayerSpec>{net::Upsample{}}; }},
      {"sigmoid", 20, [](Rng&, int&) { return std::vector<LayerSpec>{net::Sigmoid{}}; }},
      {"stack", 5,
       [](Rng&, int& c) {
         std::vector<LayerSpec> l{Conv{3, c, 3, true}, net::MaxPool{}, Conv{3, 3, 4, true}, net::Upsample{},
                                  Conv{3, 4, 2, true}, Conv{1, 2, 1, false}, net::Sigmoid{}};
         c = 1;
         return l;
       }},
  };
}

/// Loss gradient on random 4x4 maps, p in [0.1, 0.9]; odd trials use hard labels.
/// Soft labels put some entries near zero, so the error is relative to the largest entry.
inline std::vector<double> loss_sweep(int trials) {
  Rng rng(77);
  std::vector<double> out;
  for (int trial = 0; trial < trials; ++trial) {
    net::Tensor<double> p = random_tensor(rng, 1, 1, 4, 4, 0.1, 0.9);
    net::Tensor<double> y = random_tensor(rng, 1, 1, 4, 4, 0.0, 1.0);
    if (trial % 2) y.data() = (y.data() > 0.5).cast<double>();
    const auto r = net::loss_bce(p, y);
    double worst = 0.0, scale = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double n = oracle::central_difference([&] { return net::loss_bce(p, y).loss; }, p.data()[i], kStep);
      worst = std::max(worst, std::abs(r.grad.data()[i] - n));
      scale = std::max(scale, std::abs(n));
    }
    out.push_back(worst / scale);
  }
  return out;
}

}  // namespace scf::gradcheck
