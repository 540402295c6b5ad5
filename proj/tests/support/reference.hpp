#pragma once

// Double-precision forward pass and losses written directly from their
// definitions, independent of the float kernels. Used as the finite-difference
// oracle for every analytic gradient in the project.

#include <cmath>
#include <functional>
#include <vector>

#include "imagine/nn/network.hpp"
#include "imagine/nn/tensor.hpp"

namespace ref {

using imagine::nn::Activation;
using Matrix = std::vector<std::vector<double>>;

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::Linear;
  std::vector<double> w;  // out x in
  std::vector<double> b;
};

struct Net {
  std::vector<Layer> trunk;
  std::vector<Layer> heads;
};

inline Layer copy_layer(imagine::nn::DenseLayer& l) {
  Layer out;
  out.in = l.fan_in();
  out.out = l.fan_out();
  out.act = l.spec().activation;
  out.w.assign(l.weight().values().begin(), l.weight().values().end());
  out.b.assign(l.bias().values().begin(), l.bias().values().end());
  return out;
}

inline Net snapshot(imagine::nn::Network& net) {
  Net out;
  for (auto& l : net.trunk()) out.trunk.push_back(copy_layer(l));
  for (auto& l : net.heads()) out.heads.push_back(copy_layer(l));
  return out;
}

// Same order as Network::parameters(): per layer weight then bias, trunk then heads.
inline std::vector<double*> slots(Net& net) {
  std::vector<double*> out;
  for (auto* group : {&net.trunk, &net.heads}) {
    for (auto& l : *group) {
      for (double& v : l.w) out.push_back(&v);
      for (double& v : l.b) out.push_back(&v);
    }
  }
  return out;
}

inline std::vector<double> analytic_gradient(imagine::nn::Network& net) {
  std::vector<double> out;
  for (const auto& p : net.parameters()) {
    for (float g : p.grad->values()) out.push_back(g);
  }
  return out;
}

inline Matrix to_matrix(const imagine::nn::Tensor& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  }
  return m;
}

inline std::vector<double> apply(const Layer& l, const std::vector<double>& x, std::vector<char>* pattern) {
  std::vector<double> y(l.out);
  for (std::size_t o = 0; o < l.out; ++o) {
    double s = l.b[o];
    for (std::size_t i = 0; i < l.in; ++i) s += l.w[o * l.in + i] * x[i];
    y[o] = s;
  }
  switch (l.act) {
    case Activation::Relu:
      for (double& v : y) {
        if (pattern) pattern->push_back(v > 0.0 ? 1 : 0);
        v = v > 0.0 ? v : 0.0;
      }
      break;
    case Activation::Linear:
      break;
    case Activation::Sigmoid:
      for (double& v : y) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::Softmax: {
      double peak = y[0];
      for (double v : y) peak = std::max(peak, v);
      double total = 0.0;
      for (double& v : y) total += (v = std::exp(v - peak));
      for (double& v : y) v /= total;
      break;
    }
  }
  return y;
}

// One matrix per head, rows = batch.
inline std::vector<Matrix> forward(const Net& net, const Matrix& x, std::vector<char>* pattern = nullptr) {
  std::vector<Matrix> heads(net.heads.size());
  for (const auto& row : x) {
    std::vector<double> h = row;
    for (const auto& l : net.trunk) h = apply(l, h, pattern);
    for (std::size_t k = 0; k < net.heads.size(); ++k) heads[k].push_back(apply(net.heads[k], h, pattern));
  }
  return heads;
}

inline double mse(const Matrix& p, const Matrix& t) {
  double s = 0.0;
  for (std::size_t r = 0; r < p.size(); ++r) {
    for (std::size_t c = 0; c < p[r].size(); ++c) s += (p[r][c] - t[r][c]) * (p[r][c] - t[r][c]);
  }
  return s / static_cast<double>(p.size());
}

inline double bce(const Matrix& p, const Matrix& t) {
  double s = 0.0;
  for (std::size_t r = 0; r < p.size(); ++r) {
    for (std::size_t c = 0; c < p[r].size(); ++c) {
      const double q = std::clamp(p[r][c], 1e-7, 1.0 - 1e-7);
      s -= t[r][c] * std::log(q) + (1.0 - t[r][c]) * std::log(1.0 - q);
    }
  }
  return s / static_cast<double>(p.size());
}

inline double logcosh(const Matrix& p, const Matrix& t) {
  double s = 0.0;
  for (std::size_t r = 0; r < p.size(); ++r) {
    for (std::size_t c = 0; c < p[r].size(); ++c) s += std::log(std::cosh(p[r][c] - t[r][c]));
  }
  return s / static_cast<double>(p.size());
}

inline double kl(const std::vector<double>& mu, const std::vector<double>& logvar) {
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) s += -0.5 * (1.0 + logvar[j] - mu[j] * mu[j] - std::exp(logvar[j]));
  return s;
}

// Direct mixture density, no log-sum-exp: sum_k alpha_k prod_j N(y_j; mu, exp(logvar)).
inline double mdn_nll_row(const std::vector<double>& alpha, const std::vector<double>& mu,
                          const std::vector<double>& logvar, const std::vector<double>& y) {
  const double pi = 3.14159265358979323846;
  const std::size_t dim = y.size();
  double density = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    double p = alpha[k];
    for (std::size_t j = 0; j < dim; ++j) {
      const double var = std::exp(logvar[k * dim + j]);
      const double d = y[j] - mu[k * dim + j];
      p *= std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * pi * var);
    }
    density += p;
  }
  return -std::log(density);
}

struct GradCheck {
  double relative_error = 0.0;
  std::size_t kink_fallbacks = 0;
};

// Central differences over every slot. `loss` evaluates with the current slot
// values and records the ReLU pattern; if a perturbation flips any unit the
// step shrinks from 1e-3 to 1e-6 for that coordinate.
inline GradCheck finite_difference_check(const std::vector<double>& analytic, const std::vector<double*>& params,
                                         const std::function<double(std::vector<char>*)>& loss) {
  GradCheck out;
  std::vector<char> base;
  loss(&base);
  double diff2 = 0.0;
  double a2 = 0.0;
  double n2 = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i];
    const double saved = *p;
    auto central = [&](double h, bool& kinked) {
      std::vector<char> plus_pattern;
      std::vector<char> minus_pattern;
      *p = saved + h;
      const double fp = loss(&plus_pattern);
      *p = saved - h;
      const double fm = loss(&minus_pattern);
      *p = saved;
      kinked = plus_pattern != base || minus_pattern != base;
      return (fp - fm) / (2.0 * h);
    };
    bool kinked = false;
    double g = central(1e-3, kinked);
    if (kinked) {
      ++out.kink_fallbacks;
      g = central(1e-6, kinked);
    }
    diff2 += (g - analytic[i]) * (g - analytic[i]);
    a2 += analytic[i] * analytic[i];
    n2 += g * g;
  }
  const double scale = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
  out.relative_error = std::sqrt(diff2) / scale;
  return out;
}

}  // namespace ref
