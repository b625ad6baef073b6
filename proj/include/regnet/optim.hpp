#pragma once

#include <cmath>
#include <span>

#include "regnet/tensor.hpp"

namespace regnet {

struct AdamSettings {
  double alpha = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update from the accumulated gradients. Increments
/// each parameter's step counter; gradients are left untouched.
template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, const AdamSettings& s) {
  for (Parameter<Scalar>* p : params) {
    ++p->step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(p->step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(p->step));
    auto m = p->first_moment.vector();
    auto v = p->second_moment.vector();
    const auto g = std::as_const(p->grad).vector();
    m = Scalar(s.beta1) * m + Scalar(1.0 - s.beta1) * g;
    v = Scalar(s.beta2) * v + Scalar(1.0 - s.beta2) * g.cwiseAbs2();
    auto x = p->value.vector();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double m_hat = static_cast<double>(m[i]) / c1;
      const double v_hat = static_cast<double>(v[i]) / c2;
      x[i] -= static_cast<Scalar>(s.alpha * m_hat / (std::sqrt(v_hat) + s.epsilon));
    }
  }
}

/// (fan_in, fan_out) of a weight tensor: out x in for fully connected,
/// out x in x k x k for convolutions.
inline std::pair<int, int> fan_in_out(const Shape& shape) {
  if (shape.size() < 2) throw Error("xavier_init: cannot derive fans from shape " + shape_string(shape));
  int receptive = 1;
  for (std::size_t i = 2; i < shape.size(); ++i) receptive *= shape[i];
  return {shape[1] * receptive, shape[0] * receptive};
}

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
Tensor<Scalar> xavier_init(const Shape& shape, Rng& rng) {
  const auto [fan_in, fan_out] = fan_in_out(shape);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor<Scalar> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(uniform(rng, -bound, bound));
  return t;
}

}  // namespace regnet
