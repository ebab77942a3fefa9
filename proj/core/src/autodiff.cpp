#include "uavnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace uavnet::ad {

namespace {

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) {
    throw NonFiniteError(std::string("non-finite value produced by ") + what);
  }
}

Tape* common_tape(Var a, Var b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument("invalid Var");
  if (a.tape() != b.tape()) {
    throw std::invalid_argument("Vars belong to different tapes");
  }
  return a.tape();
}

Tensor map_unary(const Tensor& x, double (*fn)(double)) {
  Tensor out = Tensor::zeros_like(x);
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = fn(src[i]);
  return out;
}

void require_same_size(Var a, Var b, const char* op) {
  if (a.value().size() != b.value().size()) {
    throw ShapeError(std::string(op) + ": size mismatch " +
                     shape_string(a.value().shape()) + " vs " +
                     shape_string(b.value().shape()));
  }
}

double sigmoid_scalar(double v) {
  if (v >= 0.0) {
    const double z = std::exp(-v);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(v);
  return z / (1.0 + z);
}

double relu_scalar(double v) { return v > 0.0 ? v : 0.0; }
double tanh_scalar(double v) { return std::tanh(v); }
double exp_scalar(double v) { return std::exp(v); }
double log_scalar(double v) { return std::log(v); }

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw std::invalid_argument("invalid Var");
  return tape_->value(*this);
}

double Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ShapeError("item() on a non-scalar Var");
  return v[0];
}

void Tape::check_owned(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw std::invalid_argument("Var does not belong to this tape");
  }
}

Var Tape::record(Op op, std::vector<std::uint32_t> inputs, Tensor value,
                 double scalar, std::size_t index) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  Node node;
  node.op = op;
  node.scalar = scalar;
  node.index = index;
  for (std::uint32_t in : inputs) {
    if (in >= id) throw std::logic_error("tape input does not precede node");
    node.needs_grad = node.needs_grad || nodes_[in].needs_grad;
  }
  node.inputs = std::move(inputs);
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, id);
}

Var Tape::constant(Tensor value) {
  require_finite(value, "constant");
  return record(Op::kConstant, {}, std::move(value));
}

Var Tape::leaf(Tensor value) {
  require_finite(value, "leaf");
  Var v = record(Op::kLeaf, {}, std::move(value));
  nodes_[v.id()].needs_grad = true;
  return v;
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  require_finite(p.value, p.name.c_str());
  Var v = record(Op::kParam, {}, p.value);
  nodes_[v.id()].param = &p;
  nodes_[v.id()].needs_grad = true;
  param_nodes_.emplace(&p, v.id());
  return v;
}

const Tensor& Tape::value(Var v) const {
  check_owned(v);
  return nodes_[v.id()].value;
}

Tensor Tape::grad(Var v) const {
  check_owned(v);
  const Node& n = nodes_[v.id()];
  Tensor out = Tensor::zeros_like(n.value);
  if (!n.grad.empty()) std::copy(n.grad.begin(), n.grad.end(), out.data().begin());
  return out;
}

bool Tape::requires_grad(Var v) const {
  check_owned(v);
  return nodes_[v.id()].needs_grad;
}

Op Tape::op(Var v) const {
  check_owned(v);
  return nodes_[v.id()].op;
}

std::vector<double>& Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var output) {
  check_owned(output);
  if (nodes_[output.id()].value.size() != 1) {
    throw ShapeError("backward() requires a scalar output, got " +
                     shape_string(nodes_[output.id()].value.shape()));
  }
  for (Node& n : nodes_) n.grad.clear();
  backward_visits_ = 0;

  grad_buffer(output.id())[0] = 1.0;
  for (std::int64_t id = output.id(); id >= 0; --id) {
    ++backward_visits_;
    const auto uid = static_cast<std::uint32_t>(id);
    Node& n = nodes_[uid];
    if (n.grad.empty() || !n.needs_grad) continue;
    for (std::uint32_t in : n.inputs) {
      if (in >= uid) throw std::logic_error("cycle detected in tape");
    }
    propagate(uid);
  }

  for (std::uint32_t id = 0; id <= output.id(); ++id) {
    Node& n = nodes_[id];
    if (n.op != Op::kParam || n.grad.empty()) continue;
    auto dst = n.param->grad.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
  }
}

void Tape::propagate(std::uint32_t id) {
  Node& n = nodes_[id];
  const std::vector<double>& gy = n.grad;
  const std::vector<double>& y = n.value.storage();

  auto input_needs = [&](std::size_t k) { return nodes_[n.inputs[k]].needs_grad; };
  auto input_value = [&](std::size_t k) -> const std::vector<double>& {
    return nodes_[n.inputs[k]].value.storage();
  };

  switch (n.op) {
    case Op::kConstant:
    case Op::kLeaf:
    case Op::kParam:
      break;

    case Op::kLinear:
    case Op::kMatVec: {
      const Tensor& w = nodes_[n.inputs[0]].value;
      const std::vector<double>& x = input_value(1);
      const std::size_t m = w.rows();
      const std::size_t cols = w.cols();
      if (input_needs(0)) {
        auto& gw = grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < m; ++i) {
          const double g = gy[i];
          if (g == 0.0) continue;
          double* row = gw.data() + i * cols;
          for (std::size_t j = 0; j < cols; ++j) row[j] += g * x[j];
        }
      }
      if (input_needs(1)) {
        auto& gx = grad_buffer(n.inputs[1]);
        const double* wd = w.storage().data();
        for (std::size_t i = 0; i < m; ++i) {
          const double g = gy[i];
          if (g == 0.0) continue;
          const double* row = wd + i * cols;
          for (std::size_t j = 0; j < cols; ++j) gx[j] += row[j] * g;
        }
      }
      if (n.op == Op::kLinear && input_needs(2)) {
        auto& gb = grad_buffer(n.inputs[2]);
        for (std::size_t i = 0; i < m; ++i) gb[i] += gy[i];
      }
      break;
    }

    case Op::kAdd:
    case Op::kSub: {
      const double sign = n.op == Op::kAdd ? 1.0 : -1.0;
      if (input_needs(0)) {
        auto& ga = grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      }
      if (input_needs(1)) {
        auto& gb = grad_buffer(n.inputs[1]);
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += sign * gy[i];
      }
      break;
    }

    case Op::kMul: {
      if (input_needs(0)) {
        const auto& b = input_value(1);
        auto& ga = grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * b[i];
      }
      if (input_needs(1)) {
        const auto& a = input_value(0);
        auto& gb = grad_buffer(n.inputs[1]);
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * a[i];
      }
      break;
    }

    case Op::kScale: {
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += n.scalar * gy[i];
      break;
    }

    case Op::kAddConst: {
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
      break;
    }

    case Op::kRelu: {
      const auto& x = input_value(0);
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) {
        if (x[i] > 0.0) gx[i] += gy[i];
      }
      break;
    }

    case Op::kTanh: {
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * (1.0 - y[i] * y[i]);
      break;
    }

    case Op::kSigmoid: {
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * y[i] * (1.0 - y[i]);
      break;
    }

    case Op::kExp: {
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * y[i];
      break;
    }

    case Op::kLog: {
      const auto& x = input_value(0);
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] / x[i];
      break;
    }

    case Op::kSoftmax: {
      double s = 0.0;
      for (std::size_t i = 0; i < gy.size(); ++i) s += gy[i] * y[i];
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += y[i] * (gy[i] - s);
      break;
    }

    case Op::kLogSoftmax: {
      double s = 0.0;
      for (double g : gy) s += g;
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] - std::exp(y[i]) * s;
      break;
    }

    case Op::kConcat: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const std::size_t len = nodes_[n.inputs[k]].value.size();
        if (input_needs(k)) {
          auto& gx = grad_buffer(n.inputs[k]);
          for (std::size_t i = 0; i < len; ++i) gx[i] += gy[offset + i];
        }
        offset += len;
      }
      break;
    }

    case Op::kSlice: {
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[n.index + i] += gy[i];
      break;
    }

    case Op::kSum:
    case Op::kMean: {
      auto& gx = grad_buffer(n.inputs[0]);
      const double g = n.op == Op::kSum ? gy[0] : gy[0] / static_cast<double>(gx.size());
      for (double& v : gx) v += g;
      break;
    }

    case Op::kDot: {
      if (input_needs(0)) {
        const auto& b = input_value(1);
        auto& ga = grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[0] * b[i];
      }
      if (input_needs(1)) {
        const auto& a = input_value(0);
        auto& gb = grad_buffer(n.inputs[1]);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[0] * a[i];
      }
      break;
    }

    case Op::kSquare: {
      const auto& x = input_value(0);
      auto& gx = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += 2.0 * x[i] * gy[i];
      break;
    }

    case Op::kPick: {
      auto& gx = grad_buffer(n.inputs[0]);
      gx[n.index] += gy[0];
      break;
    }
  }
}

Var linear(Var weights, Var bias, Var input) {
  Tape* tape = common_tape(weights, input);
  common_tape(weights, bias);
  const Tensor& w = weights.value();
  const Tensor& x = input.value();
  const Tensor& b = bias.value();
  if (w.rank() != 2 || x.size() != w.cols() || b.size() != w.rows()) {
    throw ShapeError("linear: W " + shape_string(w.shape()) + ", b " +
                     shape_string(b.shape()) + ", x " + shape_string(x.shape()));
  }
  const std::size_t m = w.rows();
  const std::size_t cols = w.cols();
  Tensor out({m});
  const double* wd = w.storage().data();
  const double* xd = x.storage().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = wd + i * cols;
    double acc = b[i];
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * xd[j];
    out[i] = acc;
  }
  require_finite(out, "linear");
  return tape->record(Op::kLinear, {weights.id(), input.id(), bias.id()}, std::move(out));
}

Var matvec(Var weights, Var input) {
  Tape* tape = common_tape(weights, input);
  const Tensor& w = weights.value();
  const Tensor& x = input.value();
  if (w.rank() != 2 || x.size() != w.cols()) {
    throw ShapeError("matvec: W " + shape_string(w.shape()) + ", x " +
                     shape_string(x.shape()));
  }
  Tensor out({w.rows()});
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) acc += w.at(i, j) * x[j];
    out[i] = acc;
  }
  require_finite(out, "matvec");
  return tape->record(Op::kMatVec, {weights.id(), input.id()}, std::move(out));
}

Var add(Var a, Var b) {
  Tape* tape = common_tape(a, b);
  require_same_size(a, b, "add");
  Tensor out = a.value();
  out.set_requires_grad(false);
  auto bd = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  require_finite(out, "add");
  return tape->record(Op::kAdd, {a.id(), b.id()}, std::move(out));
}

Var sub(Var a, Var b) {
  Tape* tape = common_tape(a, b);
  require_same_size(a, b, "sub");
  Tensor out = a.value();
  out.set_requires_grad(false);
  auto bd = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
  require_finite(out, "sub");
  return tape->record(Op::kSub, {a.id(), b.id()}, std::move(out));
}

Var mul(Var a, Var b) {
  Tape* tape = common_tape(a, b);
  require_same_size(a, b, "mul");
  Tensor out = a.value();
  out.set_requires_grad(false);
  auto bd = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
  require_finite(out, "mul");
  return tape->record(Op::kMul, {a.id(), b.id()}, std::move(out));
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  out.set_requires_grad(false);
  for (double& v : out.data()) v *= factor;
  require_finite(out, "scale");
  return a.tape()->record(Op::kScale, {a.id()}, std::move(out), factor);
}

Var add_const(Var a, double c) {
  Tensor out = a.value();
  out.set_requires_grad(false);
  for (double& v : out.data()) v += c;
  require_finite(out, "add_const");
  return a.tape()->record(Op::kAddConst, {a.id()}, std::move(out), c);
}

Var relu(Var x) {
  return x.tape()->record(Op::kRelu, {x.id()}, map_unary(x.value(), relu_scalar));
}

Var tanh(Var x) {
  return x.tape()->record(Op::kTanh, {x.id()}, map_unary(x.value(), tanh_scalar));
}

Var sigmoid(Var x) {
  return x.tape()->record(Op::kSigmoid, {x.id()}, map_unary(x.value(), sigmoid_scalar));
}

Var exp(Var x) {
  Tensor out = map_unary(x.value(), exp_scalar);
  require_finite(out, "exp");
  return x.tape()->record(Op::kExp, {x.id()}, std::move(out));
}

Var log(Var x) {
  Tensor out = map_unary(x.value(), log_scalar);
  require_finite(out, "log");
  return x.tape()->record(Op::kLog, {x.id()}, std::move(out));
}

Var softmax(Var logits) {
  const Tensor& x = logits.value();
  Tensor out = Tensor::zeros_like(x);
  const double mx = *std::max_element(x.data().begin(), x.data().end());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    z += out[i];
  }
  for (double& v : out.data()) v /= z;
  require_finite(out, "softmax");
  return logits.tape()->record(Op::kSoftmax, {logits.id()}, std::move(out));
}

Var log_softmax(Var logits) {
  const Tensor& x = logits.value();
  Tensor out = Tensor::zeros_like(x);
  const double mx = *std::max_element(x.data().begin(), x.data().end());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += std::exp(x[i] - mx);
  const double lse = mx + std::log(z);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  require_finite(out, "log_softmax");
  return logits.tape()->record(Op::kLogSoftmax, {logits.id()}, std::move(out));
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat of zero parts");
  Tape* tape = parts.front().tape();
  std::vector<std::uint32_t> ids;
  ids.reserve(parts.size());
  std::size_t total = 0;
  for (const Var& p : parts) {
    common_tape(parts.front(), p);
    ids.push_back(p.id());
    total += p.value().size();
  }
  std::vector<double> data;
  data.reserve(total);
  for (const Var& p : parts) {
    auto d = p.value().data();
    data.insert(data.end(), d.begin(), d.end());
  }
  return tape->record(Op::kConcat, std::move(ids), Tensor::vector(std::move(data)));
}

Var slice(Var x, std::size_t offset, std::size_t length) {
  const Tensor& v = x.value();
  if (length == 0 || offset + length > v.size()) {
    throw ShapeError("slice out of range");
  }
  std::vector<double> data(v.data().begin() + static_cast<std::ptrdiff_t>(offset),
                           v.data().begin() + static_cast<std::ptrdiff_t>(offset + length));
  return x.tape()->record(Op::kSlice, {x.id()}, Tensor::vector(std::move(data)), 0.0, offset);
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  Tensor out = Tensor::scalar(s);
  require_finite(out, "sum");
  return x.tape()->record(Op::kSum, {x.id()}, std::move(out));
}

Var mean(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  Tensor out = Tensor::scalar(s / static_cast<double>(x.value().size()));
  require_finite(out, "mean");
  return x.tape()->record(Op::kMean, {x.id()}, std::move(out));
}

Var dot(Var a, Var b) {
  Tape* tape = common_tape(a, b);
  require_same_size(a, b, "dot");
  double s = 0.0;
  auto ad = a.value().data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < ad.size(); ++i) s += ad[i] * bd[i];
  Tensor out = Tensor::scalar(s);
  require_finite(out, "dot");
  return tape->record(Op::kDot, {a.id(), b.id()}, std::move(out));
}

Var square(Var x) {
  Tensor out = x.value();
  out.set_requires_grad(false);
  for (double& v : out.data()) v *= v;
  require_finite(out, "square");
  return x.tape()->record(Op::kSquare, {x.id()}, std::move(out));
}

Var pick(Var x, std::size_t index) {
  if (index >= x.value().size()) throw ShapeError("pick index out of range");
  return x.tape()->record(Op::kPick, {x.id()}, Tensor::scalar(x.value()[index]), 0.0, index);
}

Var stop_gradient(Var x) {
  Tensor copy = x.value();
  copy.set_requires_grad(false);
  return x.tape()->constant(std::move(copy));
}

LstmOutput lstm_step(Var weights, Var bias, Var input, Var hidden, Var cell) {
  const std::size_t u = hidden.value().size();
  if (cell.value().size() != u) throw ShapeError("lstm_step: hidden/cell size mismatch");
  const Tensor& w = weights.value();
  if (w.rank() != 2 || w.rows() != 4 * u || w.cols() != input.value().size() + u) {
    throw ShapeError("lstm_step: weights " + shape_string(w.shape()) +
                     " do not match input " + std::to_string(input.value().size()) +
                     " and hidden " + std::to_string(u));
  }
  const Var xh[] = {input, hidden};
  const Var z = linear(weights, bias, concat(xh));
  const Var in_gate = sigmoid(slice(z, 0, u));
  const Var forget_gate = sigmoid(slice(z, u, u));
  const Var candidate = tanh(slice(z, 2 * u, u));
  const Var out_gate = sigmoid(slice(z, 3 * u, u));
  const Var next_cell = forget_gate * cell + in_gate * candidate;
  const Var next_hidden = out_gate * tanh(next_cell);
  return {next_hidden, next_cell};
}

Var categorical_entropy(Var log_probs) {
  return -dot(exp(log_probs), log_probs);
}

Var gaussian_log_prob(Var mean_v, Var log_std, const Tensor& sample) {
  if (mean_v.value().size() != sample.size() || log_std.value().size() != sample.size()) {
    throw ShapeError("gaussian_log_prob: size mismatch");
  }
  Tape* tape = mean_v.tape();
  const Var x = tape->constant(Tensor::vector(sample.storage()));
  const Var z = (x - mean_v) * exp(-log_std);
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
  const double n = static_cast<double>(sample.size());
  return add_const(-(0.5 * sum(square(z)) + sum(log_std)), -log_norm * n);
}

Var gaussian_entropy(Var log_std) {
  const double per_dim = 0.5 + 0.5 * std::log(2.0 * std::numbers::pi);
  return add_const(sum(log_std), per_dim * static_cast<double>(log_std.value().size()));
}

}  // namespace uavnet::ad
