#include "rtc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rtc::ad {
namespace {

constexpr double kLogFloor = 1e-300;

std::string shape_str(const Array& a) {
  std::ostringstream os;
  os << "[" << a.rows() << "x" << a.cols() << "]";
  return os.str();
}

[[noreturn]] void shape_fail(OpTag op, std::initializer_list<const Array*> operands,
                             std::string_view detail = {}) {
  std::ostringstream os;
  os << op_name(op) << ": illegal operand shapes";
  for (const Array* a : operands) os << " " << shape_str(*a);
  if (!detail.empty()) os << " (" << detail << ")";
  throw ShapeError(os.str());
}

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw std::invalid_argument("operands live on different tapes");
  }
  return a.tape();
}

Var elementwise(OpTag op, Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Array& x = a.value();
  const Array& y = b.value();
  if (x.rows() != y.rows() || x.cols() != y.cols()) shape_fail(op, {&x, &y});
  Array out;
  switch (op) {
    case OpTag::add: out = x + y; break;
    case OpTag::sub: out = x - y; break;
    case OpTag::mul: out = x.cwiseProduct(y); break;
    default: throw std::logic_error("not an elementwise op");
  }
  return t.record(op, {a.id(), b.id()}, std::move(out));
}

Var unary(OpTag op, Var x, Array out) {
  return x.tape().record(op, {x.id()}, std::move(out));
}

Array row_softmax(const Array& x) {
  Array out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

}  // namespace

std::string_view op_name(OpTag op) {
  switch (op) {
    case OpTag::constant: return "constant";
    case OpTag::parameter: return "parameter";
    case OpTag::add: return "add";
    case OpTag::sub: return "subtract";
    case OpTag::mul: return "multiply";
    case OpTag::matmul: return "matmul";
    case OpTag::add_row: return "add_row";
    case OpTag::scale: return "scale";
    case OpTag::shift: return "shift";
    case OpTag::neg: return "negate";
    case OpTag::tanh: return "tanh";
    case OpTag::relu: return "relu";
    case OpTag::exp: return "exp";
    case OpTag::log: return "log";
    case OpTag::square: return "square";
    case OpTag::sigmoid: return "sigmoid";
    case OpTag::clamp: return "clamp";
    case OpTag::sum: return "sum";
    case OpTag::mean: return "mean";
    case OpTag::row_sum: return "row_sum";
    case OpTag::logsumexp_rows: return "logsumexp_rows";
    case OpTag::softmax_rows: return "softmax_rows";
    case OpTag::concat_cols: return "concat_cols";
    case OpTag::concat_rows: return "concat_rows";
    case OpTag::slice_cols: return "slice_cols";
    case OpTag::max_pool: return "max_pool";
    case OpTag::gather_rows: return "gather_rows";
    case OpTag::select_blocks: return "select_blocks";
    case OpTag::straight_through: return "straight_through";
  }
  return "unknown";
}

const Array& Var::value() const {
  if (!valid()) throw std::logic_error("use of an unbound Var");
  return tape_->node(id_).value;
}

double Var::scalar() const {
  const Array& v = value();
  if (v.size() != 1) {
    throw ShapeError("scalar(): expected 1x1, got " + shape_str(v));
  }
  return v(0, 0);
}

Var Tape::constant(Array value) { return record(OpTag::constant, {}, std::move(value)); }

Var Tape::parameter(const std::string& name, const Array& value) {
  if (auto it = params_.find(name); it != params_.end()) return Var(this, it->second);
  Var v = record(OpTag::parameter, {}, value);
  node(v.id()).name = name;
  params_.emplace(name, v.id());
  return v;
}

Var Tape::record(OpTag op, std::vector<int> inputs, Array value) {
  Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  n.needs_grad = op == OpTag::parameter;
  for (int i : n.inputs) n.needs_grad = n.needs_grad || node(i).needs_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::accumulate(int id, const Array& g) {
  Node& n = node(id);
  if (!n.needs_grad) return;
  if (n.adjoint.size() == 0) {
    n.adjoint = g;
  } else {
    n.adjoint += g;
  }
}

Gradients Tape::backward(Var root) {
  if (&root.tape() != this) throw std::invalid_argument("backward: root is on another tape");
  if (root.value().size() != 1) {
    throw ShapeError("backward: root must be scalar, got " + shape_str(root.value()));
  }
  for (Node& n : nodes_) n.adjoint.resize(0, 0);
  node(root.id()).adjoint = Array::Ones(1, 1);

  for (int id = root.id(); id >= 0; --id) {
    Node& n = node(id);
    if (n.adjoint.size() == 0 || n.inputs.empty()) continue;
    const Array& g = n.adjoint;
    const Array& y = n.value;
    auto in = [&](std::size_t k) -> const Array& { return node(n.inputs[k]).value; };

    switch (n.op) {
      case OpTag::constant:
      case OpTag::parameter:
        break;
      case OpTag::add:
        accumulate(n.inputs[0], g);
        accumulate(n.inputs[1], g);
        break;
      case OpTag::sub:
        accumulate(n.inputs[0], g);
        accumulate(n.inputs[1], -g);
        break;
      case OpTag::mul:
        accumulate(n.inputs[0], g.cwiseProduct(in(1)));
        accumulate(n.inputs[1], g.cwiseProduct(in(0)));
        break;
      case OpTag::matmul:
        if (node(n.inputs[0]).needs_grad) accumulate(n.inputs[0], g * in(1).transpose());
        if (node(n.inputs[1]).needs_grad) accumulate(n.inputs[1], in(0).transpose() * g);
        break;
      case OpTag::add_row:
        accumulate(n.inputs[0], g);
        accumulate(n.inputs[1], g.colwise().sum());
        break;
      case OpTag::scale:
        accumulate(n.inputs[0], n.a * g);
        break;
      case OpTag::shift:
        accumulate(n.inputs[0], g);
        break;
      case OpTag::neg:
        accumulate(n.inputs[0], -g);
        break;
      case OpTag::tanh:
        accumulate(n.inputs[0], g.cwiseProduct((1.0 - y.array().square()).matrix()));
        break;
      case OpTag::relu:
        accumulate(n.inputs[0], (in(0).array() > 0.0).select(g, 0.0));
        break;
      case OpTag::exp:
        accumulate(n.inputs[0], g.cwiseProduct(y));
        break;
      case OpTag::log: {
        const Array& x = in(0);
        accumulate(n.inputs[0], (x.array() >= kLogFloor).select(g.array() / x.array(), 0.0).matrix());
        break;
      }
      case OpTag::square:
        accumulate(n.inputs[0], 2.0 * g.cwiseProduct(in(0)));
        break;
      case OpTag::sigmoid:
        accumulate(n.inputs[0], g.cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
        break;
      case OpTag::clamp: {
        const Array& x = in(0);
        accumulate(n.inputs[0],
                   ((x.array() >= n.a) && (x.array() <= n.b)).select(g, 0.0).matrix());
        break;
      }
      case OpTag::sum:
        accumulate(n.inputs[0], Array::Constant(in(0).rows(), in(0).cols(), g(0, 0)));
        break;
      case OpTag::mean: {
        const Array& x = in(0);
        accumulate(n.inputs[0],
                   Array::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(x.size())));
        break;
      }
      case OpTag::row_sum:
        accumulate(n.inputs[0], g.replicate(1, in(0).cols()));
        break;
      case OpTag::logsumexp_rows: {
        Array s = row_softmax(in(0));
        for (Index r = 0; r < s.rows(); ++r) s.row(r) *= g(r, 0);
        accumulate(n.inputs[0], s);
        break;
      }
      case OpTag::softmax_rows: {
        Array gx = y.cwiseProduct(g);
        for (Index r = 0; r < gx.rows(); ++r) {
          gx.row(r) -= y.row(r) * gx.row(r).sum();
        }
        accumulate(n.inputs[0], gx);
        break;
      }
      case OpTag::concat_cols: {
        Index offset = 0;
        for (int src : n.inputs) {
          const Index c = node(src).value.cols();
          accumulate(src, g.middleCols(offset, c));
          offset += c;
        }
        break;
      }
      case OpTag::concat_rows: {
        Index offset = 0;
        for (int src : n.inputs) {
          const Index r = node(src).value.rows();
          accumulate(src, g.middleRows(offset, r));
          offset += r;
        }
        break;
      }
      case OpTag::slice_cols: {
        Array gx = Array::Zero(in(0).rows(), in(0).cols());
        gx.middleCols(static_cast<Index>(n.a), g.cols()) = g;
        accumulate(n.inputs[0], gx);
        break;
      }
      case OpTag::max_pool: {
        Array gx = Array::Zero(in(0).rows(), in(0).cols());
        const Index cols = y.cols();
        for (Index r = 0; r < y.rows(); ++r) {
          for (Index c = 0; c < cols; ++c) {
            gx(n.index[static_cast<std::size_t>(r * cols + c)], c) += g(r, c);
          }
        }
        accumulate(n.inputs[0], gx);
        break;
      }
      case OpTag::gather_rows: {
        Array gx = Array::Zero(in(0).rows(), in(0).cols());
        for (Index r = 0; r < g.rows(); ++r) gx.row(n.index[static_cast<std::size_t>(r)]) += g.row(r);
        accumulate(n.inputs[0], gx);
        break;
      }
      case OpTag::select_blocks: {
        Array gx = Array::Zero(in(0).rows(), in(0).cols());
        for (Index r = 0; r < g.rows(); ++r) {
          gx.block(r, n.index[static_cast<std::size_t>(r)] * n.width, 1, n.width) += g.row(r);
        }
        accumulate(n.inputs[0], gx);
        break;
      }
      case OpTag::straight_through:
        accumulate(n.inputs[0], g);
        break;
    }
  }

  Gradients grads;
  for (const auto& [name, id] : params_) {
    const Node& p = node(id);
    grads[name] = p.adjoint.size() == 0 ? Array::Zero(p.value.rows(), p.value.cols()) : p.adjoint;
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Forward ops

Var add(Var a, Var b) { return elementwise(OpTag::add, a, b); }
Var sub(Var a, Var b) { return elementwise(OpTag::sub, a, b); }
Var mul(Var a, Var b) { return elementwise(OpTag::mul, a, b); }
Var operator-(Var a) { return unary(OpTag::neg, a, -a.value()); }

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (a.cols() != b.rows()) shape_fail(OpTag::matmul, {&a.value(), &b.value()});
  return t.record(OpTag::matmul, {a.id(), b.id()}, a.value() * b.value());
}

Var add_row(Var x, Var row) {
  Tape& t = same_tape(x, row);
  if (row.rows() != 1 || row.cols() != x.cols()) {
    shape_fail(OpTag::add_row, {&x.value(), &row.value()});
  }
  Array out = x.value().rowwise() + row.value().row(0);
  return t.record(OpTag::add_row, {x.id(), row.id()}, std::move(out));
}

Var scale(Var x, double c) {
  Var v = unary(OpTag::scale, x, c * x.value());
  v.tape().node(v.id()).a = c;
  return v;
}

Var shift(Var x, double c) {
  return unary(OpTag::shift, x, (x.value().array() + c).matrix());
}

Var tanh(Var x) {
  // sign(x) (1 - e) / (1 + e) with e = exp(-2|x|): Eigen vectorises exp but
  // not tanh for doubles.
  const auto& v = x.value().array();
  const Eigen::ArrayXXd e = (-2.0 * v.abs()).exp();
  Array out = (v.sign() * (1.0 - e) / (1.0 + e)).matrix();
  return unary(OpTag::tanh, x, std::move(out));
}
Var relu(Var x) { return unary(OpTag::relu, x, x.value().cwiseMax(0.0)); }
Var exp(Var x) { return unary(OpTag::exp, x, x.value().array().exp().matrix()); }
Var log(Var x) {
  return unary(OpTag::log, x, x.value().array().max(kLogFloor).log().matrix());
}
Var square(Var x) { return unary(OpTag::square, x, x.value().array().square().matrix()); }
Var sigmoid(Var x) {
  return unary(OpTag::sigmoid, x, (1.0 / (1.0 + (-x.value().array()).exp())).matrix());
}

Var clamp(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  Var v = unary(OpTag::clamp, x, x.value().cwiseMax(lo).cwiseMin(hi));
  Node& n = v.tape().node(v.id());
  n.a = lo;
  n.b = hi;
  return v;
}

Var sum(Var x) { return unary(OpTag::sum, x, Array::Constant(1, 1, x.value().sum())); }

Var mean(Var x) {
  if (x.value().size() == 0) shape_fail(OpTag::mean, {&x.value()}, "empty");
  return unary(OpTag::mean, x, Array::Constant(1, 1, x.value().mean()));
}

Var row_sum(Var x) { return unary(OpTag::row_sum, x, x.value().rowwise().sum()); }

Var logsumexp_rows(Var x) {
  const Array& v = x.value();
  if (v.cols() == 0) shape_fail(OpTag::logsumexp_rows, {&v}, "no columns");
  Array out(v.rows(), 1);
  for (Index r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    out(r, 0) = m + std::log((v.row(r).array() - m).exp().sum());
  }
  return unary(OpTag::logsumexp_rows, x, std::move(out));
}

Var softmax_rows(Var x) {
  if (x.cols() == 0) shape_fail(OpTag::softmax_rows, {&x.value()}, "no columns");
  return unary(OpTag::softmax_rows, x, row_softmax(x.value()));
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Tape& t = parts.front().tape();
  Index cols = 0;
  const Index rows = parts.front().rows();
  std::vector<int> ids;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    if (p.rows() != rows) {
      std::ostringstream os;
      os << "concat_cols: row mismatch";
      for (const Var& q : parts) os << " " << shape_str(q.value());
      throw ShapeError(os.str());
    }
    cols += p.cols();
    ids.push_back(p.id());
  }
  Array out(rows, cols);
  Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return t.record(OpTag::concat_cols, std::move(ids), std::move(out));
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  Tape& t = parts.front().tape();
  Index rows = 0;
  const Index cols = parts.front().cols();
  std::vector<int> ids;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    if (p.cols() != cols) {
      std::ostringstream os;
      os << "concat_rows: column mismatch";
      for (const Var& q : parts) os << " " << shape_str(q.value());
      throw ShapeError(os.str());
    }
    rows += p.rows();
    ids.push_back(p.id());
  }
  Array out(rows, cols);
  Index offset = 0;
  for (const Var& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  return t.record(OpTag::concat_rows, std::move(ids), std::move(out));
}

Var slice_cols(Var x, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > x.cols()) {
    shape_fail(OpTag::slice_cols, {&x.value()},
               "start " + std::to_string(start) + " count " + std::to_string(count));
  }
  Var v = unary(OpTag::slice_cols, x, x.value().middleCols(start, count));
  v.tape().node(v.id()).a = static_cast<double>(start);
  return v;
}

Var max_pool(Var x, Index groups) {
  const Array& v = x.value();
  if (groups <= 0 || v.rows() % groups != 0) {
    shape_fail(OpTag::max_pool, {&v}, "rows not divisible by " + std::to_string(groups));
  }
  const Index n = v.rows() / groups;
  Array out = v.topRows(n);
  std::vector<Index> arg(static_cast<std::size_t>(n * v.cols()));
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < v.cols(); ++c) {
      Index best = r;
      for (Index g = 1; g < groups; ++g) {
        const Index src = g * n + r;
        if (v(src, c) > v(best, c)) best = src;
      }
      out(r, c) = v(best, c);
      arg[static_cast<std::size_t>(r * v.cols() + c)] = best;
    }
  }
  Var res = unary(OpTag::max_pool, x, std::move(out));
  res.tape().node(res.id()).index = std::move(arg);
  return res;
}

Var gather_rows(Var x, std::vector<Index> index) {
  const Array& v = x.value();
  Array out(static_cast<Index>(index.size()), v.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= v.rows()) {
      shape_fail(OpTag::gather_rows, {&v}, "row index " + std::to_string(index[r]));
    }
    out.row(static_cast<Index>(r)) = v.row(index[r]);
  }
  Var res = unary(OpTag::gather_rows, x, std::move(out));
  res.tape().node(res.id()).index = std::move(index);
  return res;
}

Var select_blocks(Var x, std::vector<Index> index, Index width) {
  const Array& v = x.value();
  if (width <= 0 || v.cols() % width != 0 || static_cast<Index>(index.size()) != v.rows()) {
    shape_fail(OpTag::select_blocks, {&v},
               "width " + std::to_string(width) + ", " + std::to_string(index.size()) + " indices");
  }
  const Index blocks = v.cols() / width;
  Array out(v.rows(), width);
  for (Index r = 0; r < v.rows(); ++r) {
    const Index k = index[static_cast<std::size_t>(r)];
    if (k < 0 || k >= blocks) shape_fail(OpTag::select_blocks, {&v}, "block " + std::to_string(k));
    out.row(r) = v.block(r, k * width, 1, width);
  }
  Var res = unary(OpTag::select_blocks, x, std::move(out));
  Node& n = res.tape().node(res.id());
  n.index = std::move(index);
  n.width = width;
  return res;
}

Var straight_through(Var soft, Array hard) {
  if (hard.rows() != soft.rows() || hard.cols() != soft.cols()) {
    shape_fail(OpTag::straight_through, {&soft.value(), &hard});
  }
  return unary(OpTag::straight_through, soft, std::move(hard));
}

// ---------------------------------------------------------------------------
// Parameters and optimisation

void ParameterSet::add(const std::string& name, Array value) {
  if (!values_.emplace(name, std::move(value)).second) {
    throw std::invalid_argument("duplicate parameter '" + name + "'");
  }
}

Array& ParameterSet::at(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

const Array& ParameterSet::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

Index ParameterSet::scalar_count() const {
  Index n = 0;
  for (const auto& [_, v] : values_) n += v.size();
  return n;
}

ParameterSet ParameterSet::subset(std::string_view prefix) const {
  ParameterSet out;
  for (const auto& [name, v] : values_) {
    if (name.starts_with(prefix)) out.add(name, v);
  }
  return out;
}

void ParameterSet::merge(const ParameterSet& other) {
  for (const auto& [name, v] : other) add(name, v);
}

Binding::Binding(Tape& tape, const ParameterSet& params, bool trainable)
    : tape_(&tape), trainable_(trainable) {
  for (const auto& [name, v] : params) {
    vars_.emplace(name, trainable ? tape.parameter(name, v) : tape.constant(v));
  }
}

Var Binding::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("parameter '" + name + "' is not bound");
  return it->second;
}

double grad_check(const LossFn& loss, const ParameterSet& params, double fd_step) {
  Gradients analytic;
  {
    Tape tape;
    analytic = tape.backward(loss(tape, params));
  }
  auto evaluate = [&](const ParameterSet& p) {
    Tape tape;
    return loss(tape, p).scalar();
  };

  double worst = 0.0;
  ParameterSet probe = params;
  for (const auto& [name, value] : params) {
    Array& slot = probe.at(name);
    const Array* grad = analytic.contains(name) ? &analytic.at(name) : nullptr;
    for (Index i = 0; i < value.size(); ++i) {
      const double orig = slot.data()[i];
      slot.data()[i] = orig + fd_step;
      const double up = evaluate(probe);
      slot.data()[i] = orig - fd_step;
      const double down = evaluate(probe);
      slot.data()[i] = orig;
      const double fd = (up - down) / (2.0 * fd_step);
      const double an = grad ? grad->data()[i] : 0.0;
      worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  return worst;
}

void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state,
               const AdamConfig& config) {
  for (const auto& [name, value] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::invalid_argument("adam_step: no gradient for '" + name + "'");
    if (it->second.rows() != value.rows() || it->second.cols() != value.cols()) {
      throw ShapeError("adam_step: gradient shape mismatch for '" + name + "'");
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (auto& [name, value] : params) {
    const Array& g = grads.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, Array::Zero(g.rows(), g.cols()));
    auto [v_it, v_new] = state.second_moment.try_emplace(name, Array::Zero(g.rows(), g.cols()));
    Array& m = m_it->second;
    Array& v = v_it->second;
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    value.array() -= config.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + config.epsilon);
  }
}

double clip_global_norm(Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, g] : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [_, g] : grads) g *= s;
  }
  return norm;
}

}  // namespace rtc::ad
