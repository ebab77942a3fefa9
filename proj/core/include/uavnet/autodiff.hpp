#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "uavnet/tensor.hpp"

namespace uavnet::ad {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// tape that produced it is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  std::size_t size() const { return value().size(); }
  double item() const;

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

enum class Op : std::uint8_t {
  kConstant,
  kLeaf,
  kParam,
  kLinear,
  kMatVec,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddConst,
  kRelu,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kSoftmax,
  kLogSoftmax,
  kConcat,
  kSlice,
  kSum,
  kMean,
  kDot,
  kSquare,
  kPick,
};

// Define-by-run record of a computation. Nodes are appended in evaluation
// order, so every node's inputs precede it and a single reverse sweep is a
// valid topological traversal.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Differentiable input that is not bound to a Parameter; its gradient is
  // readable through grad() after backward().
  Var leaf(Tensor value);
  // Records (once per tape) a node that reads p.value and, on backward,
  // accumulates into p.grad.
  Var param(Parameter& p);

  const Tensor& value(Var v) const;
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const;

  // Reverse sweep from a scalar output. Node gradients from a previous sweep
  // are discarded; Parameter gradients accumulate.
  void backward(Var output);

  std::size_t size() const { return nodes_.size(); }
  Op op(Var v) const;
  // Nodes processed by the most recent backward() call.
  std::size_t backward_visits() const { return backward_visits_; }

  Var record(Op op, std::vector<std::uint32_t> inputs, Tensor value,
             double scalar = 0.0, std::size_t index = 0);

 private:
  struct Node {
    Op op = Op::kConstant;
    std::vector<std::uint32_t> inputs;
    Tensor value;
    std::vector<double> grad;
    Parameter* param = nullptr;
    double scalar = 0.0;
    std::size_t index = 0;
    bool needs_grad = false;
  };

  void check_owned(Var v) const;
  std::vector<double>& grad_buffer(std::uint32_t id);
  void propagate(std::uint32_t id);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  std::size_t backward_visits_ = 0;

  friend class Var;
};

// y = W x + b with W [m x n], x [n], b [m].
Var linear(Var weights, Var bias, Var input);
Var matvec(Var weights, Var input);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_const(Var a, double c);

Var relu(Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var exp(Var x);
Var log(Var x);

Var softmax(Var logits);
Var log_softmax(Var logits);

Var concat(std::span<const Var> parts);
Var slice(Var x, std::size_t offset, std::size_t length);
Var sum(Var x);
Var mean(Var x);
Var dot(Var a, Var b);
Var square(Var x);
Var pick(Var x, std::size_t index);

// Breaks the gradient path: a constant holding the current value of x.
Var stop_gradient(Var x);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return scale(a, -1.0); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator+(Var a, double c) { return add_const(a, c); }

struct LstmOutput {
  Var hidden;
  Var cell;
};

// Gate rows of `weights` ([4u x (d+u)]) and `bias` ([4u]) are ordered
// input, forget, candidate, output. Input is [d], hidden and cell are [u].
LstmOutput lstm_step(Var weights, Var bias, Var input, Var hidden, Var cell);

// -sum(p * log p) for a probability vector given as log-probabilities.
Var categorical_entropy(Var log_probs);

// Sum over coordinates of the diagonal Gaussian log-density of `sample`.
Var gaussian_log_prob(Var mean, Var log_std, const Tensor& sample);

// Entropy of a diagonal Gaussian, summed over coordinates.
Var gaussian_entropy(Var log_std);

}  // namespace uavnet::ad
