// Define-by-run reverse-mode automatic differentiation over dense 2-D arrays.
//
// Every quantity is an Eigen::MatrixXd; scalars are 1x1 and batches are laid
// out one sample per row. A Tape is rebuilt for every training step, owns the
// nodes it records, and is confined to a single thread.
#pragma once

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rtc::ad {

using Array = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raised when operand shapes are illegal for an op. The message names the op
/// and every operand shape.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class OpTag {
  constant,
  parameter,
  add,
  sub,
  mul,
  matmul,
  add_row,
  scale,
  shift,
  neg,
  tanh,
  relu,
  exp,
  log,
  square,
  sigmoid,
  clamp,
  sum,
  mean,
  row_sum,
  logsumexp_rows,
  softmax_rows,
  concat_cols,
  concat_rows,
  slice_cols,
  max_pool,
  gather_rows,
  select_blocks,
  straight_through,
};

std::string_view op_name(OpTag op);

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Array& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;

  int id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

struct Node {
  OpTag op = OpTag::constant;
  std::vector<int> inputs;
  Array value;
  Array adjoint;  // empty until the backward sweep reaches the node
  bool needs_grad = false;  // a parameter lies upstream

  // op-specific payload
  double a = 0.0;
  double b = 0.0;
  Index width = 0;
  std::vector<Index> index;
  std::string name;
};

using Gradients = std::map<std::string, Array>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value);
  /// Registers a named leaf. Registering an existing name returns the
  /// original node.
  Var parameter(const std::string& name, const Array& value);

  Var record(OpTag op, std::vector<int> inputs, Array value);
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar root. Returns the gradient of every
  /// registered parameter; parameters the root does not depend on get zeros.
  Gradients backward(Var root);

 private:
  void accumulate(int id, const Array& g);

  std::deque<Node> nodes_;  // deque keeps value references stable on growth
  std::map<std::string, int> params_;
};

// Elementwise arithmetic; operands must share a shape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
Var operator-(Var a);
inline Var neg(Var a) { return -a; }

Var matmul(Var a, Var b);
/// x (n x m) plus a 1 x m row repeated over every row of x.
Var add_row(Var x, Var row);
Var scale(Var x, double c);
Var shift(Var x, double c);
inline Var operator*(double c, Var x) { return scale(x, c); }
inline Var operator+(Var x, double c) { return shift(x, c); }

Var tanh(Var x);
Var relu(Var x);
Var exp(Var x);
/// Natural log with inputs clamped below at 1e-300.
Var log(Var x);
Var square(Var x);
Var sigmoid(Var x);
Var clamp(Var x, double lo, double hi);

Var sum(Var x);
Var mean(Var x);
/// n x m -> n x 1
Var row_sum(Var x);
/// n x m -> n x 1, max-subtracted
Var logsumexp_rows(Var x);
Var softmax_rows(Var x);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var x, Index start, Index count);
/// x has groups*n rows laid out as `groups` consecutive blocks of n rows;
/// returns the n x m elementwise maximum over the blocks.
Var max_pool(Var x, Index groups);
/// Row r of the result is row index[r] of x.
Var gather_rows(Var x, std::vector<Index> index);
/// x is n x (k*width); row r of the result is block index[r] of row r.
Var select_blocks(Var x, std::vector<Index> index, Index width);
/// Forward value is `hard`; the gradient passes to `soft` unchanged.
Var straight_through(Var soft, Array hard);

/// Named learnable arrays. Ordered so that iteration is deterministic.
class ParameterSet {
 public:
  void add(const std::string& name, Array value);
  bool contains(const std::string& name) const { return values_.contains(name); }
  Array& at(const std::string& name);
  const Array& at(const std::string& name) const;
  std::size_t size() const { return values_.size(); }
  Index scalar_count() const;
  /// Copy of the entries whose name begins with `prefix`.
  ParameterSet subset(std::string_view prefix) const;
  void merge(const ParameterSet& other);

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::map<std::string, Array> values_;
};

/// A ParameterSet registered on a tape, either as learnable leaves or as
/// constants (frozen: no gradient can reach them).
class Binding {
 public:
  Binding(Tape& tape, const ParameterSet& params, bool trainable);
  Var operator[](const std::string& name) const;
  Tape& tape() const { return *tape_; }
  bool trainable() const { return trainable_; }

 private:
  Tape* tape_;
  bool trainable_;
  std::map<std::string, Var> vars_;
};

using LossFn = std::function<Var(Tape&, const ParameterSet&)>;

/// Max over every scalar parameter of |analytic - central difference| /
/// max(1, |central difference|). `loss` must register its parameters on the
/// tape it receives and be deterministic.
double grad_check(const LossFn& loss, const ParameterSet& params, double fd_step);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::map<std::string, Array> first_moment;
  std::map<std::string, Array> second_moment;
  long step = 0;
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam update of every entry in `params`. Throws if a
/// parameter has no gradient or a shape disagrees.
void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state,
               const AdamConfig& config);

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before scaling.
double clip_global_norm(Gradients& grads, double max_norm);

}  // namespace rtc::ad
