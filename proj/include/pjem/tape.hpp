#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pjem/numeric_array.hpp"

namespace pjem {

// Closed primitive set. Shape rules follow numpy where a choice exists:
//   matmul        rank-2 x rank-2, optional operand transposes
//   add           same shape, or (r x c) + {c} broadcast over rows
//   sub, elementwise_mul   same shape
//   scalar_mul    any shape, constant factor
//   relu, exp     any shape, elementwise
//   log_eps       any shape, ln(x + kLogEps); operands must be >= 0
//   row_softmax   rank-1 (single row) or rank-2 (independent rows)
//   sum/mean/max_axis   rank-1 axis 0 -> scalar; rank-2 axis 0 -> {cols}, axis 1 -> {rows}
//   concat        rank-1 operands, axis 0: stack as rows into rank-2;
//                 rank-1 operands, axis 1: join into one rank-1;
//                 rank-2 operands: concatenate along axis
//   slice         contiguous [start, start+length) along axis
enum class OpKind {
  kMatmul,
  kAdd,
  kSub,
  kElementwiseMul,
  kScalarMul,
  kRelu,
  kExp,
  kLogEps,
  kRowSoftmax,
  kSumAxis,
  kMeanAxis,
  kMaxAxis,
  kConcat,
  kSlice,
};

const char* op_name(OpKind op);

struct OpAttrs {
  bool trans_a = false;  // matmul
  bool trans_b = false;  // matmul
  double scale = 1.0;    // scalar_mul
  int axis = 0;          // reductions, concat, slice
  int start = 0;         // slice
  int length = 0;        // slice
};

struct ValueId {
  std::int32_t index = -1;
  bool valid() const { return index >= 0; }
};

// Reverse-mode tape over NumericArray values. Values are computed eagerly as
// nodes are appended, so operands always precede their consumers. A tape is
// confined to one thread for its lifetime; independent tapes are unrelated.
class Tape {
 public:
  // Leaf that never receives an adjoint of interest (data, masks, constants).
  ValueId input(NumericArray value);
  // Differentiable leaf; backward() guarantees it an adjoint of its shape.
  ValueId parameter(NumericArray value, std::string name = {});

  ValueId apply(OpKind op, std::span<const ValueId> operands, const OpAttrs& attrs = {});

  const NumericArray& value(ValueId id) const;
  const std::string& name(ValueId id) const;
  std::span<const ValueId> parameters() const { return parameters_; }

  // Replaces a leaf's value (shape must match) and marks node values stale.
  void set_leaf_value(ValueId id, const NumericArray& value);
  // Recomputes every non-leaf value in topological order.
  void replay();

  // Reverse sweep from a scalar root. Clears previous adjoints. Nodes with no
  // path to the root keep a zero adjoint.
  void backward(ValueId root);

  // Adjoint of a node after backward(); zeros if the node is off every path.
  const NumericArray& adjoint(ValueId id);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind op = OpKind::kMatmul;
    bool is_leaf = false;
    bool is_parameter = false;
    std::vector<std::int32_t> operands;
    OpAttrs attrs;
    NumericArray value;
    std::vector<int> arg_indices;  // argmax positions for max_axis
    std::string name;
  };

  ValueId push_leaf(NumericArray value, bool is_parameter, std::string name);
  const Node& node(ValueId id) const;
  static NumericArray compute(OpKind op, const OpAttrs& attrs,
                              std::span<const NumericArray* const> operands,
                              std::vector<int>* arg_indices);
  NumericArray& adjoint_slot(std::int32_t index);

  std::vector<Node> nodes_;
  std::vector<ValueId> parameters_;
  std::vector<NumericArray> adjoints_;  // parallel to nodes_; empty = zero
  bool swept_ = false;
};

// Convenience builders.
ValueId matmul(Tape& t, ValueId a, ValueId b, bool trans_a = false, bool trans_b = false);
ValueId add(Tape& t, ValueId a, ValueId b);
ValueId sub(Tape& t, ValueId a, ValueId b);
ValueId elementwise_mul(Tape& t, ValueId a, ValueId b);
ValueId scalar_mul(Tape& t, ValueId a, double scale);
ValueId relu(Tape& t, ValueId a);
ValueId exp_elem(Tape& t, ValueId a);
ValueId log_eps(Tape& t, ValueId a);
ValueId row_softmax(Tape& t, ValueId a);
ValueId sum_axis(Tape& t, ValueId a, int axis);
ValueId mean_axis(Tape& t, ValueId a, int axis);
ValueId max_axis(Tape& t, ValueId a, int axis);
ValueId concat(Tape& t, std::span<const ValueId> parts, int axis);
ValueId slice(Tape& t, ValueId a, int axis, int start, int length);
// sum of all entries as a scalar (sum_axis chain)
ValueId sum_all(Tape& t, ValueId a);

// Central-difference gradient verification. `build` must append a scalar root
// to the tape it is given, using exactly the supplied parameter leaves; it is
// invoked on fresh tapes and must be deterministic (verified by evaluating it
// twice and comparing roots bit-for-bit). Returns the maximum over parameter
// coordinates of |analytic - fd| / max(1, |analytic|, |fd|).
using BuildScalarFn = std::function<ValueId(Tape&, std::span<const ValueId>)>;
double check_gradients(const BuildScalarFn& build, std::span<const NumericArray> params, double step);

}  // namespace pjem
