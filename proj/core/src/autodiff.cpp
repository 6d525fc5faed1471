#include "mlnc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mlnc {

Var Tape::constant(Tensor2 value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, {}});
  return Var{nodes_.size() - 1};
}

Var Tape::param(Param& p) {
  nodes_.push_back(Node{p.value, {}, record_, record_ ? &p : nullptr, {}});
  return Var{nodes_.size() - 1};
}

Var Tape::push(Tensor2 value, std::span<const Var> inputs, BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by op #" + std::to_string(nodes_.size()));
  }
  bool needs = false;
  if (record_) {
    for (Var v : inputs) needs = needs || nodes_.at(v.id).needs_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, nullptr, needs ? std::move(fn) : BackwardFn{}});
  return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var target, const Tensor2& delta) {
  Node& n = nodes_.at(target.id);
  if (!n.needs_grad) return;
  require_same_shape(n.value, delta, "Tape::accumulate");
  if (n.grad.empty()) {
    n.grad = delta;
  } else {
    axpy(1.0, delta, n.grad);
  }
}

void Tape::accumulate(Var target, Tensor2&& delta) {
  Node& n = nodes_.at(target.id);
  if (!n.needs_grad) return;
  require_same_shape(n.value, delta, "Tape::accumulate");
  if (n.grad.empty()) {
    n.grad = std::move(delta);
  } else {
    axpy(1.0, delta, n.grad);
  }
}

void Tape::backward(Var loss) {
  if (!record_) throw std::logic_error("backward on a non-recording tape");
  Node& root = nodes_.at(loss.id);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ShapeError("backward target must be 1x1, got " + root.value.shape_string());
  }
  for (Node& n : nodes_) {
    if (n.param != nullptr) {
      n.param->grad = Tensor2(n.param->value.rows(), n.param->value.cols());
      n.param->has_grad = true;
    }
    n.grad = Tensor2();
  }
  if (!root.needs_grad) return;
  root.grad = Tensor2(1, 1, 1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) axpy(1.0, n.grad, n.param->grad);
  }
}

namespace nn {

Var linear(Tape& tape, Var input, Var weight, std::optional<Var> bias) {
  Tensor2 out = mlnc::matmul(tape.value(input), tape.value(weight));
  if (bias) {
    const Tensor2& b = tape.value(*bias);
    if (b.rows() != 1 || b.cols() != out.cols()) {
      throw ShapeError("linear: bias " + b.shape_string() + " for output " + out.shape_string());
    }
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      for (std::size_t c = 0; c < out.cols(); ++c) row[c] += b(0, c);
    }
  }
  if (!bias) {
    return tape.push(std::move(out), {input, weight}, [input, weight](Tape& t, std::size_t self) {
      const Tensor2& g = t.upstream(self);
      if (t.needs_grad(input)) t.accumulate(input, matmul_nt(g, t.value(weight)));
      if (t.needs_grad(weight)) t.accumulate(weight, matmul_tn(t.value(input), g));
    });
  }
  Var b = *bias;
  return tape.push(std::move(out), {input, weight, b}, [input, weight, b](Tape& t, std::size_t self) {
    const Tensor2& g = t.upstream(self);
    if (t.needs_grad(input)) t.accumulate(input, matmul_nt(g, t.value(weight)));
    if (t.needs_grad(weight)) t.accumulate(weight, matmul_tn(t.value(input), g));
    if (t.needs_grad(b)) {
      Tensor2 db(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) db(0, c) += g(r, c);
      t.accumulate(b, std::move(db));
    }
  });
}

Var matmul(Tape& tape, Var a, Var b) { return linear(tape, a, b); }

Var add(Tape& tape, Var a, Var b) { return axpby(tape, 1.0, a, 1.0, b); }

Var axpby(Tape& tape, double alpha, Var a, double beta, Var b) {
  const Tensor2& va = tape.value(a);
  const Tensor2& vb = tape.value(b);
  require_same_shape(va, vb, "axpby");
  Tensor2 out(va.rows(), va.cols());
  auto o = out.data();
  auto x = va.data();
  auto y = vb.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = alpha * x[i] + beta * y[i];
  return tape.push(std::move(out), {a, b}, [a, b, alpha, beta](Tape& t, std::size_t self) {
    const Tensor2& g = t.upstream(self);
    if (t.needs_grad(a)) {
      Tensor2 d(g.rows(), g.cols());
      axpy(alpha, g, d);
      t.accumulate(a, std::move(d));
    }
    if (t.needs_grad(b)) {
      Tensor2 d(g.rows(), g.cols());
      axpy(beta, g, d);
      t.accumulate(b, std::move(d));
    }
  });
}

Var scale(Tape& tape, Var a, double alpha) {
  Tensor2 out(tape.value(a).rows(), tape.value(a).cols());
  axpy(alpha, tape.value(a), out);
  return tape.push(std::move(out), {a}, [a, alpha](Tape& t, std::size_t self) {
    const Tensor2& g = t.upstream(self);
    Tensor2 d(g.rows(), g.cols());
    axpy(alpha, g, d);
    t.accumulate(a, std::move(d));
  });
}

Var mean(Tape& tape, std::span<const Var> terms) {
  if (terms.empty()) throw std::invalid_argument("nn::mean of zero terms");
  const double w = 1.0 / static_cast<double>(terms.size());
  const Tensor2& first = tape.value(terms.front());
  Tensor2 out(first.rows(), first.cols());
  for (Var v : terms) {
    require_same_shape(first, tape.value(v), "nn::mean");
    axpy(w, tape.value(v), out);
  }
  std::vector<Var> inputs(terms.begin(), terms.end());
  return tape.push(std::move(out), terms, [inputs, w](Tape& t, std::size_t self) {
    const Tensor2& g = t.upstream(self);
    for (Var v : inputs) {
      if (!t.needs_grad(v)) continue;
      Tensor2 d(g.rows(), g.cols());
      axpy(w, g, d);
      t.accumulate(v, std::move(d));
    }
  });
}

Var propagate(Tape& tape, const NormalizedAdjacency& adj, Var input) {
  const NormalizedAdjacency* a = &adj;
  return tape.push(spmm(adj, tape.value(input)), {input}, [a, input](Tape& t, std::size_t self) {
    t.accumulate(input, spmm(*a, t.upstream(self)));
  });
}

Var relu(Tape& tape, Var input) {
  const Tensor2& x = tape.value(input);
  Tensor2 out(x.rows(), x.cols());
  auto o = out.data();
  auto xi = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xi[i] > 0.0 ? xi[i] : 0.0;
  return tape.push(std::move(out), {input}, [input](Tape& t, std::size_t self) {
    const Tensor2& g = t.upstream(self);
    auto xv = t.value(input).data();
    Tensor2 d(g.rows(), g.cols());
    auto dd = d.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = xv[i] > 0.0 ? gd[i] : 0.0;
    t.accumulate(input, std::move(d));
  });
}

Var sigmoid(Tape& tape, Var input) {
  Tensor2 out = mlnc::sigmoid(tape.value(input));
  return tape.push(std::move(out), {input}, [input](Tape& t, std::size_t self) {
    const Tensor2& g = t.upstream(self);
    const Tensor2& y = t.value(Var{self});
    Tensor2 d(g.rows(), g.cols());
    auto dd = d.data();
    auto gd = g.data();
    auto yd = y.data();
    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = gd[i] * yd[i] * (1.0 - yd[i]);
    t.accumulate(input, std::move(d));
  });
}

namespace {

void check_affine_params(const Tensor2& x, const Tensor2& g, const Tensor2& b, std::size_t width,
                         const char* op) {
  if (g.rows() != 1 || g.cols() != width || !g.same_shape(b)) {
    throw ShapeError(std::string(op) + ": scale/shift " + g.shape_string() + "/" +
                     b.shape_string() + " for input " + x.shape_string());
  }
}

// Shared backward for batch and layer norm once xhat and 1/sigma are known.
// `per_column` selects the reduction axis of the normalization.
void norm_backward(Tape& t, std::size_t self, Var input, Var scale_var, Var shift_var,
                   const Tensor2& xhat, const std::vector<double>& inv_std, bool per_column,
                   bool batch_stats) {
  const Tensor2& g = t.upstream(self);
  const Tensor2& gamma = t.value(scale_var);
  const std::size_t n = g.rows();
  const std::size_t h = g.cols();

  if (t.needs_grad(scale_var) || t.needs_grad(shift_var)) {
    // Scale/shift are per column for both norms.
    Tensor2 dgamma(1, h);
    Tensor2 dbeta(1, h);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < h; ++c) {
        dgamma(0, c) += g(r, c) * xhat(r, c);
        dbeta(0, c) += g(r, c);
      }
    }
    t.accumulate(scale_var, std::move(dgamma));
    t.accumulate(shift_var, std::move(dbeta));
  }
  if (!t.needs_grad(input)) return;

  Tensor2 dx(n, h);
  if (!batch_stats) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < h; ++c) dx(r, c) = g(r, c) * gamma(0, c) * inv_std[c];
    t.accumulate(input, std::move(dx));
    return;
  }
  if (per_column) {
    const double m = static_cast<double>(n);
    for (std::size_t c = 0; c < h; ++c) {
      double sum_d = 0.0;
      double sum_dx = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d = g(r, c) * gamma(0, c);
        sum_d += d;
        sum_dx += d * xhat(r, c);
      }
      for (std::size_t r = 0; r < n; ++r) {
        const double d = g(r, c) * gamma(0, c);
        dx(r, c) = inv_std[c] / m * (m * d - sum_d - xhat(r, c) * sum_dx);
      }
    }
  } else {
    const double m = static_cast<double>(h);
    for (std::size_t r = 0; r < n; ++r) {
      double sum_d = 0.0;
      double sum_dx = 0.0;
      for (std::size_t c = 0; c < h; ++c) {
        const double d = g(r, c) * gamma(0, c);
        sum_d += d;
        sum_dx += d * xhat(r, c);
      }
      for (std::size_t c = 0; c < h; ++c) {
        const double d = g(r, c) * gamma(0, c);
        dx(r, c) = inv_std[r] / m * (m * d - sum_d - xhat(r, c) * sum_dx);
      }
    }
  }
  t.accumulate(input, std::move(dx));
}

}  // namespace

Var batch_norm(Tape& tape, Var input, Var scale_var, Var shift_var, RunningStats& stats,
               Mode mode) {
  const Tensor2& x = tape.value(input);
  const Tensor2& gamma = tape.value(scale_var);
  const Tensor2& beta = tape.value(shift_var);
  const std::size_t n = x.rows();
  const std::size_t h = x.cols();
  check_affine_params(x, gamma, beta, h, "batch_norm");
  if (stats.mean.cols() != h || stats.var.cols() != h) {
    throw ShapeError("batch_norm: running stats width " + std::to_string(stats.mean.cols()) +
                     " for input " + x.shape_string());
  }

  std::vector<double> inv_std(h);
  Tensor2 xhat(n, h);
  const bool batch_stats = mode == Mode::kTrain;
  if (batch_stats) {
    if (n < 2) throw std::invalid_argument("batch_norm: train mode needs at least 2 rows");
    const double m = static_cast<double>(n);
    for (std::size_t c = 0; c < h; ++c) {
      double mu = 0.0;
      for (std::size_t r = 0; r < n; ++r) mu += x(r, c);
      mu /= m;
      double var = 0.0;
      for (std::size_t r = 0; r < n; ++r) var += (x(r, c) - mu) * (x(r, c) - mu);
      var /= m;
      inv_std[c] = 1.0 / std::sqrt(var + kNormEpsilon);
      for (std::size_t r = 0; r < n; ++r) xhat(r, c) = (x(r, c) - mu) * inv_std[c];
      stats.mean(0, c) = (1.0 - stats.momentum) * stats.mean(0, c) + stats.momentum * mu;
      stats.var(0, c) = (1.0 - stats.momentum) * stats.var(0, c) + stats.momentum * var * m / (m - 1.0);
    }
  } else {
    for (std::size_t c = 0; c < h; ++c) {
      inv_std[c] = 1.0 / std::sqrt(stats.var(0, c) + kNormEpsilon);
      for (std::size_t r = 0; r < n; ++r) xhat(r, c) = (x(r, c) - stats.mean(0, c)) * inv_std[c];
    }
  }

  Tensor2 out(n, h);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < h; ++c) out(r, c) = gamma(0, c) * xhat(r, c) + beta(0, c);

  if (!tape.recording()) return tape.push(std::move(out), {input}, {});
  return tape.push(std::move(out), {input, scale_var, shift_var},
                   [input, scale_var, shift_var, xhat = std::move(xhat),
                    inv_std = std::move(inv_std), batch_stats](Tape& t, std::size_t self) {
                     norm_backward(t, self, input, scale_var, shift_var, xhat, inv_std, true,
                                   batch_stats);
                   });
}

Var layer_norm(Tape& tape, Var input, Var scale_var, Var shift_var) {
  const Tensor2& x = tape.value(input);
  const Tensor2& gamma = tape.value(scale_var);
  const Tensor2& beta = tape.value(shift_var);
  const std::size_t n = x.rows();
  const std::size_t h = x.cols();
  check_affine_params(x, gamma, beta, h, "layer_norm");
  if (h < 2) throw std::invalid_argument("layer_norm needs at least 2 features");

  std::vector<double> inv_std(n);
  Tensor2 xhat(n, h);
  const double m = static_cast<double>(h);
  for (std::size_t r = 0; r < n; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < h; ++c) mu += x(r, c);
    mu /= m;
    double var = 0.0;
    for (std::size_t c = 0; c < h; ++c) var += (x(r, c) - mu) * (x(r, c) - mu);
    var /= m;
    inv_std[r] = 1.0 / std::sqrt(var + kNormEpsilon);
    for (std::size_t c = 0; c < h; ++c) xhat(r, c) = (x(r, c) - mu) * inv_std[r];
  }
  Tensor2 out(n, h);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < h; ++c) out(r, c) = gamma(0, c) * xhat(r, c) + beta(0, c);

  if (!tape.recording()) return tape.push(std::move(out), {input}, {});
  return tape.push(std::move(out), {input, scale_var, shift_var},
                   [input, scale_var, shift_var, xhat = std::move(xhat),
                    inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
                     norm_backward(t, self, input, scale_var, shift_var, xhat, inv_std, false,
                                   true);
                   });
}

Var dropout(Tape& tape, Var input, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::kEval || rate == 0.0) return input;

  const Tensor2& x = tape.value(input);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor2 mask(x.rows(), x.cols());
  for (double& m : mask.data()) m = keep(rng) ? keep_scale : 0.0;
  Tensor2 out(x.rows(), x.cols());
  auto o = out.data();
  auto xd = x.data();
  auto md = mask.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xd[i] * md[i];
  return tape.push(std::move(out), {input}, [input, mask = std::move(mask)](Tape& t, std::size_t self) {
    const Tensor2& g = t.upstream(self);
    Tensor2 d(g.rows(), g.cols());
    auto dd = d.data();
    auto gd = g.data();
    auto mdd = mask.data();
    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] = gd[i] * mdd[i];
    t.accumulate(input, std::move(d));
  });
}

Var bce_with_logits(Tape& tape, Var logits, const Tensor2& targets,
                    std::span<const std::size_t> rows) {
  const Tensor2& z = tape.value(logits);
  double loss = bce_loss(z, targets, rows);
  std::vector<std::size_t> ids(rows.begin(), rows.end());
  const Tensor2* y = &targets;
  return tape.push(Tensor2(1, 1, loss), {logits}, [logits, ids = std::move(ids), y](Tape& t, std::size_t self) {
    const double g = t.upstream(self)(0, 0);
    const Tensor2& zv = t.value(logits);
    Tensor2 d(zv.rows(), zv.cols());
    for (std::size_t r : ids) {
      for (std::size_t c = 0; c < zv.cols(); ++c) d(r, c) += g * (mlnc::sigmoid(zv(r, c)) - (*y)(r, c));
    }
    t.accumulate(logits, std::move(d));
  });
}

}  // namespace nn

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Tensor2 sigmoid(const Tensor2& logits) {
  Tensor2 out(logits.rows(), logits.cols());
  auto o = out.data();
  auto z = logits.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = sigmoid(z[i]);
  return out;
}

double bce_loss(const Tensor2& logits, const Tensor2& targets, std::span<const std::size_t> rows) {
  require_same_shape(logits, targets, "bce_loss");
  if (rows.empty()) throw std::invalid_argument("bce_loss: empty row mask");
  double loss = 0.0;
  for (std::size_t r : rows) {
    if (r >= logits.rows()) {
      throw std::out_of_range("bce_loss: row " + std::to_string(r) + " out of range");
    }
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      const double z = logits(r, c);
      const double y = targets(r, c);
      loss += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - z * y;
    }
  }
  return loss;
}

}  // namespace mlnc
