#include "mlnc/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mlnc {

void Adam::step(std::span<Param> params) {
  for (const Param& p : params) {
    if (!p.has_grad) throw std::logic_error("adam step before backward for param '" + p.id + "'");
    require_same_shape(p.value, p.grad, "adam step");
  }
  if (t_ == 0) {
    m_.clear();
    v_.clear();
    for (const Param& p : params) {
      m_.emplace_back(p.value.rows(), p.value.cols());
      v_.emplace_back(p.value.rows(), p.value.cols());
    }
  } else if (m_.size() != params.size()) {
    throw std::logic_error("adam: parameter list changed between steps");
  }

  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = options_.learning_rate;

  for (std::size_t k = 0; k < params.size(); ++k) {
    require_same_shape(params[k].value, m_[k], "adam moments");
    auto theta = params[k].value.data();
    auto g = params[k].grad.data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

}  // namespace mlnc
