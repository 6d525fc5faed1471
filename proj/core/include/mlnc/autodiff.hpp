#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "mlnc/graph.hpp"
#include "mlnc/rng.hpp"
#include "mlnc/tensor.hpp"

namespace mlnc {

enum class Mode { kTrain, kEval };

// Raised when an op produces NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trainable tensor. `grad` is zeroed and then filled by Tape::backward;
// `has_grad` stays false until the first backward pass that reaches it.
struct Param {
  Param() = default;
  Param(std::string param_id, Tensor2 initial)
      : id(std::move(param_id)), value(std::move(initial)), grad(value.rows(), value.cols()) {}

  std::string id;
  Tensor2 value;
  Tensor2 grad;
  bool has_grad = false;
};

// Batch-norm statistics used in eval mode. Initialized to mean 0, var 1.
struct RunningStats {
  RunningStats() = default;
  explicit RunningStats(std::size_t width) : mean(1, width, 0.0), var(1, width, 1.0) {}

  Tensor2 mean;
  Tensor2 var;
  double momentum = 0.1;
};

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

// Records primitive applications so that gradients can be accumulated in
// exact reverse order. A non-recording tape (eval) keeps values only.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor2 value);
  // The param must outlive the tape and must not move while it is in use.
  Var param(Param& p);

  const Tensor2& value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient of the last backward() target w.r.t. v; empty if v was unreached.
  const Tensor2& grad(Var v) const { return nodes_.at(v.id).grad; }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }

  // Zeroes every param grad on the tape, seeds d loss / d loss = 1 and visits
  // the recorded backward rules from last to first. `loss` must be 1x1.
  void backward(Var loss);

  // Op-author interface. `fn` runs during backward with this node's grad
  // populated; it calls accumulate() on its inputs.
  Var push(Tensor2 value, std::span<const Var> inputs, BackwardFn fn);
  Var push(Tensor2 value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
  }
  const Tensor2& upstream(std::size_t self) const { return nodes_[self].grad; }
  void accumulate(Var target, const Tensor2& delta);
  void accumulate(Var target, Tensor2&& delta);

 private:
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    bool needs_grad = false;
    Param* param = nullptr;
    BackwardFn backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

namespace nn {

// input (N x a) * weight (a x b) + bias (1 x b)
Var linear(Tape& tape, Var input, Var weight, std::optional<Var> bias = std::nullopt);
Var matmul(Tape& tape, Var a, Var b);
Var add(Tape& tape, Var a, Var b);
// alpha * a + beta * b
Var axpby(Tape& tape, double alpha, Var a, double beta, Var b);
Var scale(Tape& tape, Var a, double alpha);
Var mean(Tape& tape, std::span<const Var> terms);

// adj * input. Relies on adj being symmetric for the backward rule; adj must
// outlive the tape.
Var propagate(Tape& tape, const NormalizedAdjacency& adj, Var input);

Var relu(Tape& tape, Var input);
Var sigmoid(Tape& tape, Var input);

// Column-wise normalization over all N rows. Train mode uses the biased batch
// variance and updates `stats` with their momentum (running var uses the
// unbiased estimate); eval mode uses `stats`. Requires N >= 2 in train mode.
Var batch_norm(Tape& tape, Var input, Var scale, Var shift, RunningStats& stats, Mode mode);

// Row-wise normalization over the h features. Requires h >= 2.
Var layer_norm(Tape& tape, Var input, Var scale, Var shift);

// Inverted dropout: survivors are scaled by 1 / (1 - rate). Identity in eval
// mode or when rate == 0 (no random numbers are drawn then).
Var dropout(Tape& tape, Var input, double rate, Mode mode, Rng& rng);

// Summed binary cross-entropy over rows `rows` of sigmoid(logits), evaluated
// in the fused form log(1 + exp(-|z|)) + max(z, 0) - z * y. Result is 1x1.
Var bce_with_logits(Tape& tape, Var logits, const Tensor2& targets,
                    std::span<const std::size_t> rows);

inline constexpr double kNormEpsilon = 1e-5;

}  // namespace nn

double sigmoid(double z);
Tensor2 sigmoid(const Tensor2& logits);

// Value-only counterpart of nn::bce_with_logits.
double bce_loss(const Tensor2& logits, const Tensor2& targets, std::span<const std::size_t> rows);

}  // namespace mlnc
