#include "pjem/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace pjem {

namespace {

[[noreturn]] void fail(OpKind op, const std::string& what) {
  throw std::invalid_argument(std::string(op_name(op)) + ": " + what);
}

void require(bool ok, OpKind op, const std::string& what) {
  if (!ok) fail(op, what);
}

// Rank-1 arrays participate in row ops as a single row.
Eigen::Map<const Matrix> as_rows(const NumericArray& a) {
  if (a.rank() == 1) return {a.data(), 1, static_cast<int>(a.size())};
  return a.mat();
}

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kElementwiseMul: return "elementwise_mul";
    case OpKind::kScalarMul: return "scalar_mul";
    case OpKind::kRelu: return "relu";
    case OpKind::kExp: return "exp";
    case OpKind::kLogEps: return "log_eps";
    case OpKind::kRowSoftmax: return "row_softmax";
    case OpKind::kSumAxis: return "sum_axis";
    case OpKind::kMeanAxis: return "mean_axis";
    case OpKind::kMaxAxis: return "max_axis";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
  }
  return "?";
}

ValueId Tape::push_leaf(NumericArray value, bool is_parameter, std::string name) {
  Node n;
  n.is_leaf = true;
  n.is_parameter = is_parameter;
  n.value = std::move(value);
  n.name = std::move(name);
  nodes_.push_back(std::move(n));
  ValueId id{static_cast<std::int32_t>(nodes_.size() - 1)};
  if (is_parameter) parameters_.push_back(id);
  return id;
}

ValueId Tape::input(NumericArray value) { return push_leaf(std::move(value), false, {}); }

ValueId Tape::parameter(NumericArray value, std::string name) {
  return push_leaf(std::move(value), true, std::move(name));
}

const Tape::Node& Tape::node(ValueId id) const {
  if (!id.valid() || static_cast<std::size_t>(id.index) >= nodes_.size()) {
    throw std::invalid_argument("Tape: invalid value id");
  }
  return nodes_[static_cast<std::size_t>(id.index)];
}

const NumericArray& Tape::value(ValueId id) const { return node(id).value; }

const std::string& Tape::name(ValueId id) const { return node(id).name; }

void Tape::set_leaf_value(ValueId id, const NumericArray& value) {
  const Node& n = node(id);
  if (!n.is_leaf) throw std::invalid_argument("Tape: set_leaf_value on a non-leaf node");
  if (!n.value.same_shape(value)) {
    throw std::invalid_argument("Tape: set_leaf_value shape " + shape_string(value.shape()) +
                                " does not match " + shape_string(n.value.shape()));
  }
  nodes_[static_cast<std::size_t>(id.index)].value = value;
}

void Tape::replay() {
  for (Node& n : nodes_) {
    if (n.is_leaf) continue;
    std::vector<const NumericArray*> operand_values;
    operand_values.reserve(n.operands.size());
    for (std::int32_t idx : n.operands) operand_values.push_back(&nodes_[static_cast<std::size_t>(idx)].value);
    n.arg_indices.clear();
    n.value = compute(n.op, n.attrs, operand_values, &n.arg_indices);
  }
}

ValueId Tape::apply(OpKind op, std::span<const ValueId> operands, const OpAttrs& attrs) {
  std::vector<const NumericArray*> operand_values;
  operand_values.reserve(operands.size());
  std::vector<std::int32_t> operand_ids;
  operand_ids.reserve(operands.size());
  for (ValueId id : operands) {
    operand_values.push_back(&node(id).value);
    operand_ids.push_back(id.index);
  }
  Node n;
  n.op = op;
  n.attrs = attrs;
  n.operands = std::move(operand_ids);
  n.value = compute(op, attrs, operand_values, &n.arg_indices);
  nodes_.push_back(std::move(n));
  return {static_cast<std::int32_t>(nodes_.size() - 1)};
}

NumericArray Tape::compute(OpKind op, const OpAttrs& attrs,
                           std::span<const NumericArray* const> ops,
                           std::vector<int>* arg_indices) {
  auto arity = [&](std::size_t n) {
    require(ops.size() == n, op, "expected " + std::to_string(n) + " operands, got " + std::to_string(ops.size()));
  };

  switch (op) {
    case OpKind::kMatmul: {
      arity(2);
      const NumericArray& a = *ops[0];
      const NumericArray& b = *ops[1];
      require(a.rank() == 2 && b.rank() == 2, op,
              "needs rank-2 operands, got " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
      int ar = attrs.trans_a ? a.cols() : a.rows();
      int ac = attrs.trans_a ? a.rows() : a.cols();
      int br = attrs.trans_b ? b.cols() : b.rows();
      int bc = attrs.trans_b ? b.rows() : b.cols();
      require(ac == br, op, "shape mismatch " + shape_string(a.shape()) + (attrs.trans_a ? "^T" : "") + " vs " +
                                shape_string(b.shape()) + (attrs.trans_b ? "^T" : ""));
      NumericArray out = NumericArray::zeros({ar, bc});
      auto am = a.mat();
      auto bm = b.mat();
      auto om = out.mat();
      if (!attrs.trans_a && !attrs.trans_b) om.noalias() = am * bm;
      else if (attrs.trans_a && !attrs.trans_b) om.noalias() = am.transpose() * bm;
      else if (!attrs.trans_a && attrs.trans_b) om.noalias() = am * bm.transpose();
      else om.noalias() = am.transpose() * bm.transpose();
      return out;
    }
    case OpKind::kAdd: {
      arity(2);
      const NumericArray& a = *ops[0];
      const NumericArray& b = *ops[1];
      if (a.same_shape(b)) {
        NumericArray out = NumericArray::uninitialized(a.shape());
        out.flat() = a.flat() + b.flat();
        return out;
      }
      // Row broadcast: (r x c) + {c}.
      require(a.rank() == 2 && b.rank() == 1 && a.cols() == static_cast<int>(b.size()), op,
              "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
      NumericArray out = NumericArray::uninitialized(a.shape());
      out.mat() = a.mat().rowwise() + b.flat().transpose();
      return out;
    }
    case OpKind::kSub: {
      arity(2);
      const NumericArray& a = *ops[0];
      const NumericArray& b = *ops[1];
      require(a.same_shape(b), op, "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
      NumericArray out = NumericArray::uninitialized(a.shape());
      out.flat() = a.flat() - b.flat();
      return out;
    }
    case OpKind::kElementwiseMul: {
      arity(2);
      const NumericArray& a = *ops[0];
      const NumericArray& b = *ops[1];
      require(a.same_shape(b), op, "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
      NumericArray out = NumericArray::uninitialized(a.shape());
      out.flat().array() = a.flat().array() * b.flat().array();
      return out;
    }
    case OpKind::kScalarMul: {
      arity(1);
      NumericArray out = NumericArray::uninitialized(ops[0]->shape());
      out.flat() = attrs.scale * ops[0]->flat();
      return out;
    }
    case OpKind::kRelu: {
      arity(1);
      NumericArray out = NumericArray::uninitialized(ops[0]->shape());
      out.flat() = ops[0]->flat().cwiseMax(0.0);
      return out;
    }
    case OpKind::kExp: {
      arity(1);
      NumericArray out = NumericArray::uninitialized(ops[0]->shape());
      out.flat() = ops[0]->flat().array().exp();
      return out;
    }
    case OpKind::kLogEps: {
      arity(1);
      const NumericArray& a = *ops[0];
      require(a.flat().minCoeff() >= 0.0, op, "operand has negative entries");
      NumericArray out = NumericArray::uninitialized(a.shape());
      out.flat() = (a.flat().array() + kLogEps).log();
      return out;
    }
    case OpKind::kRowSoftmax: {
      arity(1);
      const NumericArray& a = *ops[0];
      require(a.rank() == 1 || a.rank() == 2, op, "needs rank-1 or rank-2, got " + shape_string(a.shape()));
      NumericArray out = NumericArray::uninitialized(a.shape());
      auto rows = as_rows(a);
      Eigen::Map<Matrix> om(out.data(), rows.rows(), rows.cols());
      Vector row_max = rows.rowwise().maxCoeff();
      om = (rows.colwise() - row_max).array().exp();
      Vector row_sum = om.rowwise().sum();
      om.array().colwise() /= row_sum.array();
      return out;
    }
    case OpKind::kSumAxis:
    case OpKind::kMeanAxis:
    case OpKind::kMaxAxis: {
      arity(1);
      const NumericArray& a = *ops[0];
      if (a.rank() == 1) {
        require(attrs.axis == 0, op, "axis must be 0 for rank-1, got " + std::to_string(attrs.axis));
        if (op == OpKind::kSumAxis) return NumericArray::scalar(a.flat().sum());
        if (op == OpKind::kMeanAxis) return NumericArray::scalar(a.flat().sum() / static_cast<double>(a.size()));
        int best = 0;
        for (int i = 1; i < a.size(); ++i) {
          if (a.data()[i] > a.data()[best]) best = i;
        }
        arg_indices->assign(1, best);
        return NumericArray::scalar(a.data()[best]);
      }
      require(a.rank() == 2, op, "needs rank-1 or rank-2, got " + shape_string(a.shape()));
      require(attrs.axis == 0 || attrs.axis == 1, op, "axis must be 0 or 1, got " + std::to_string(attrs.axis));
      auto m = a.mat();
      if (op == OpKind::kSumAxis) {
        Vector v = attrs.axis == 0 ? Vector(m.colwise().sum()) : Vector(m.rowwise().sum());
        return NumericArray::from_vector(v);
      }
      if (op == OpKind::kMeanAxis) {
        double extent = attrs.axis == 0 ? a.rows() : a.cols();
        Vector v = attrs.axis == 0 ? Vector(m.colwise().sum() / extent) : Vector(m.rowwise().sum() / extent);
        return NumericArray::from_vector(v);
      }
      // max_axis, ties resolved to the first index
      if (attrs.axis == 0) {
        Vector v(a.cols());
        arg_indices->assign(static_cast<std::size_t>(a.cols()), 0);
        for (int j = 0; j < a.cols(); ++j) {
          int best = 0;
          for (int i = 1; i < a.rows(); ++i) {
            if (m(i, j) > m(best, j)) best = i;
          }
          (*arg_indices)[static_cast<std::size_t>(j)] = best;
          v[j] = m(best, j);
        }
        return NumericArray::from_vector(v);
      }
      Vector v(a.rows());
      arg_indices->assign(static_cast<std::size_t>(a.rows()), 0);
      for (int i = 0; i < a.rows(); ++i) {
        int best = 0;
        for (int j = 1; j < a.cols(); ++j) {
          if (m(i, j) > m(i, best)) best = j;
        }
        (*arg_indices)[static_cast<std::size_t>(i)] = best;
        v[i] = m(i, best);
      }
      return NumericArray::from_vector(v);
    }
    case OpKind::kConcat: {
      require(!ops.empty(), op, "needs at least one operand");
      require(attrs.axis == 0 || attrs.axis == 1, op, "axis must be 0 or 1, got " + std::to_string(attrs.axis));
      int rank = ops[0]->rank();
      for (const NumericArray* p : ops) {
        require(p->rank() == rank, op, "mixed operand ranks");
      }
      if (rank == 1) {
        if (attrs.axis == 0) {
          // Stack rank-1 operands of equal length as the rows of a matrix.
          int width = static_cast<int>(ops[0]->size());
          for (const NumericArray* p : ops) {
            require(static_cast<int>(p->size()) == width, op,
                    "length mismatch " + shape_string(ops[0]->shape()) + " vs " + shape_string(p->shape()));
          }
          NumericArray out = NumericArray::zeros({static_cast<int>(ops.size()), width});
          auto om = out.mat();
          for (std::size_t i = 0; i < ops.size(); ++i) om.row(static_cast<int>(i)) = ops[i]->flat().transpose();
          return out;
        }
        Eigen::Index total = 0;
        for (const NumericArray* p : ops) total += p->size();
        NumericArray out = NumericArray::zeros({static_cast<int>(total)});
        Eigen::Index at = 0;
        for (const NumericArray* p : ops) {
          out.flat().segment(at, p->size()) = p->flat();
          at += p->size();
        }
        return out;
      }
      require(rank == 2, op, "needs rank-1 or rank-2 operands");
      if (attrs.axis == 0) {
        int colsn = ops[0]->cols();
        int rows = 0;
        for (const NumericArray* p : ops) {
          require(p->cols() == colsn, op,
                  "column mismatch " + shape_string(ops[0]->shape()) + " vs " + shape_string(p->shape()));
          rows += p->rows();
        }
        NumericArray out = NumericArray::zeros({rows, colsn});
        int at = 0;
        for (const NumericArray* p : ops) {
          out.mat().middleRows(at, p->rows()) = p->mat();
          at += p->rows();
        }
        return out;
      }
      int rowsn = ops[0]->rows();
      int cols = 0;
      for (const NumericArray* p : ops) {
        require(p->rows() == rowsn, op,
                "row mismatch " + shape_string(ops[0]->shape()) + " vs " + shape_string(p->shape()));
        cols += p->cols();
      }
      NumericArray out = NumericArray::zeros({rowsn, cols});
      int at = 0;
      for (const NumericArray* p : ops) {
        out.mat().middleCols(at, p->cols()) = p->mat();
        at += p->cols();
      }
      return out;
    }
    case OpKind::kSlice: {
      arity(1);
      const NumericArray& a = *ops[0];
      require(a.rank() == 1 || a.rank() == 2, op, "needs rank-1 or rank-2, got " + shape_string(a.shape()));
      int extent = a.rank() == 1 ? static_cast<int>(a.size()) : (attrs.axis == 0 ? a.rows() : a.cols());
      require(attrs.axis == 0 || attrs.axis == 1, op, "axis must be 0 or 1, got " + std::to_string(attrs.axis));
      require(a.rank() == 2 || attrs.axis == 0, op, "axis must be 0 for rank-1");
      require(attrs.start >= 0 && attrs.length >= 1 && attrs.start + attrs.length <= extent, op,
              "range [" + std::to_string(attrs.start) + "," + std::to_string(attrs.start + attrs.length) +
                  ") out of bounds for " + shape_string(a.shape()));
      if (a.rank() == 1) {
        NumericArray out = NumericArray::zeros({attrs.length});
        out.flat() = a.flat().segment(attrs.start, attrs.length);
        return out;
      }
      if (attrs.axis == 0) {
        NumericArray out = NumericArray::zeros({attrs.length, a.cols()});
        out.mat() = a.mat().middleRows(attrs.start, attrs.length);
        return out;
      }
      NumericArray out = NumericArray::zeros({a.rows(), attrs.length});
      out.mat() = a.mat().middleCols(attrs.start, attrs.length);
      return out;
    }
  }
  throw std::logic_error("Tape: unhandled op kind");
}

NumericArray& Tape::adjoint_slot(std::int32_t index) {
  NumericArray& slot = adjoints_[static_cast<std::size_t>(index)];
  if (slot.size() == 0) slot = NumericArray::zeros(nodes_[static_cast<std::size_t>(index)].value.shape());
  return slot;
}

void Tape::backward(ValueId root) {
  const Node& root_node = node(root);
  if (!root_node.value.is_scalar()) {
    throw std::invalid_argument("Tape: backward root must be a scalar, got shape " +
                                shape_string(root_node.value.shape()));
  }
  adjoints_.assign(nodes_.size(), NumericArray{});
  swept_ = true;
  adjoint_slot(root.index).fill(1.0);

  for (std::int32_t i = root.index; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf) continue;
    const NumericArray& g = adjoints_[static_cast<std::size_t>(i)];
    if (g.size() == 0) continue;  // no path to the root

    auto operand = [&](std::size_t k) -> const NumericArray& {
      return nodes_[static_cast<std::size_t>(n.operands[k])].value;
    };
    auto slot = [&](std::size_t k) -> NumericArray& { return adjoint_slot(n.operands[k]); };

    switch (n.op) {
      case OpKind::kMatmul: {
        const NumericArray& a = operand(0);
        const NumericArray& b = operand(1);
        auto gm = g.mat();
        auto am = a.mat();
        auto bm = b.mat();
        auto da = slot(0).mat();
        auto db = slot(1).mat();
        if (!n.attrs.trans_a && !n.attrs.trans_b) {
          da.noalias() += gm * bm.transpose();
          db.noalias() += am.transpose() * gm;
        } else if (n.attrs.trans_a && !n.attrs.trans_b) {
          da.noalias() += bm * gm.transpose();
          db.noalias() += am * gm;
        } else if (!n.attrs.trans_a && n.attrs.trans_b) {
          da.noalias() += gm * bm;
          db.noalias() += gm.transpose() * am;
        } else {
          da.noalias() += bm.transpose() * gm.transpose();
          db.noalias() += gm.transpose() * am.transpose();
        }
        break;
      }
      case OpKind::kAdd: {
        const NumericArray& a = operand(0);
        const NumericArray& b = operand(1);
        slot(0).flat() += g.flat();
        if (a.same_shape(b)) {
          slot(1).flat() += g.flat();
        } else {
          slot(1).flat() += g.mat().colwise().sum().transpose();
        }
        break;
      }
      case OpKind::kSub: {
        slot(0).flat() += g.flat();
        slot(1).flat() -= g.flat();
        break;
      }
      case OpKind::kElementwiseMul: {
        slot(0).flat().array() += g.flat().array() * operand(1).flat().array();
        slot(1).flat().array() += g.flat().array() * operand(0).flat().array();
        break;
      }
      case OpKind::kScalarMul: {
        slot(0).flat() += n.attrs.scale * g.flat();
        break;
      }
      case OpKind::kRelu: {
        slot(0).flat().array() +=
            g.flat().array() * (n.value.flat().array() > 0.0).cast<double>();
        break;
      }
      case OpKind::kExp: {
        slot(0).flat().array() += g.flat().array() * n.value.flat().array();
        break;
      }
      case OpKind::kLogEps: {
        slot(0).flat().array() += g.flat().array() / (operand(0).flat().array() + kLogEps);
        break;
      }
      case OpKind::kRowSoftmax: {
        auto y = as_rows(n.value);
        Eigen::Map<const Matrix> gm(g.data(), y.rows(), y.cols());
        Vector row_dot = (gm.array() * y.array()).rowwise().sum();
        Matrix shifted = gm;
        shifted.colwise() -= row_dot;
        Eigen::Map<Matrix> da(slot(0).data(), y.rows(), y.cols());
        da.array() += y.array() * shifted.array();
        break;
      }
      case OpKind::kSumAxis:
      case OpKind::kMeanAxis: {
        const NumericArray& a = operand(0);
        double denom = 1.0;
        if (n.op == OpKind::kMeanAxis) {
          denom = a.rank() == 1 ? static_cast<double>(a.size())
                                : static_cast<double>(n.attrs.axis == 0 ? a.rows() : a.cols());
        }
        if (a.rank() == 1) {
          slot(0).flat().array() += g.value() / denom;
        } else if (n.attrs.axis == 0) {
          slot(0).mat().rowwise() += (g.flat() / denom).transpose();
        } else {
          slot(0).mat().colwise() += g.flat() / denom;
        }
        break;
      }
      case OpKind::kMaxAxis: {
        const NumericArray& a = operand(0);
        NumericArray& da = slot(0);
        if (a.rank() == 1) {
          da.flat()[n.arg_indices[0]] += g.value();
        } else if (n.attrs.axis == 0) {
          for (int j = 0; j < a.cols(); ++j) da.mat()(n.arg_indices[static_cast<std::size_t>(j)], j) += g.flat()[j];
        } else {
          for (int i = 0; i < a.rows(); ++i) da.mat()(i, n.arg_indices[static_cast<std::size_t>(i)]) += g.flat()[i];
        }
        break;
      }
      case OpKind::kConcat: {
        int rank = operand(0).rank();
        if (rank == 1 && n.attrs.axis == 0) {
          auto gm = g.mat();
          for (std::size_t k = 0; k < n.operands.size(); ++k) {
            slot(k).flat() += gm.row(static_cast<int>(k)).transpose();
          }
        } else if (rank == 1) {
          Eigen::Index at = 0;
          for (std::size_t k = 0; k < n.operands.size(); ++k) {
            slot(k).flat() += g.flat().segment(at, operand(k).size());
            at += operand(k).size();
          }
        } else if (n.attrs.axis == 0) {
          int at = 0;
          for (std::size_t k = 0; k < n.operands.size(); ++k) {
            slot(k).mat() += g.mat().middleRows(at, operand(k).rows());
            at += operand(k).rows();
          }
        } else {
          int at = 0;
          for (std::size_t k = 0; k < n.operands.size(); ++k) {
            slot(k).mat() += g.mat().middleCols(at, operand(k).cols());
            at += operand(k).cols();
          }
        }
        break;
      }
      case OpKind::kSlice: {
        const NumericArray& a = operand(0);
        NumericArray& da = slot(0);
        if (a.rank() == 1) {
          da.flat().segment(n.attrs.start, n.attrs.length) += g.flat();
        } else if (n.attrs.axis == 0) {
          da.mat().middleRows(n.attrs.start, n.attrs.length) += g.mat();
        } else {
          da.mat().middleCols(n.attrs.start, n.attrs.length) += g.mat();
        }
        break;
      }
    }
  }

  // Every parameter leaf ends the sweep with an adjoint of its own shape.
  for (ValueId p : parameters_) adjoint_slot(p.index);
}

const NumericArray& Tape::adjoint(ValueId id) {
  node(id);  // validates
  if (!swept_) throw std::logic_error("Tape: adjoint() before backward()");
  return adjoint_slot(id.index);
}

ValueId matmul(Tape& t, ValueId a, ValueId b, bool trans_a, bool trans_b) {
  OpAttrs attrs;
  attrs.trans_a = trans_a;
  attrs.trans_b = trans_b;
  ValueId ops[] = {a, b};
  return t.apply(OpKind::kMatmul, ops, attrs);
}

ValueId add(Tape& t, ValueId a, ValueId b) {
  ValueId ops[] = {a, b};
  return t.apply(OpKind::kAdd, ops);
}

ValueId sub(Tape& t, ValueId a, ValueId b) {
  ValueId ops[] = {a, b};
  return t.apply(OpKind::kSub, ops);
}

ValueId elementwise_mul(Tape& t, ValueId a, ValueId b) {
  ValueId ops[] = {a, b};
  return t.apply(OpKind::kElementwiseMul, ops);
}

ValueId scalar_mul(Tape& t, ValueId a, double scale) {
  OpAttrs attrs;
  attrs.scale = scale;
  ValueId ops[] = {a};
  return t.apply(OpKind::kScalarMul, ops, attrs);
}

ValueId relu(Tape& t, ValueId a) {
  ValueId ops[] = {a};
  return t.apply(OpKind::kRelu, ops);
}

ValueId exp_elem(Tape& t, ValueId a) {
  ValueId ops[] = {a};
  return t.apply(OpKind::kExp, ops);
}

ValueId log_eps(Tape& t, ValueId a) {
  ValueId ops[] = {a};
  return t.apply(OpKind::kLogEps, ops);
}

ValueId row_softmax(Tape& t, ValueId a) {
  ValueId ops[] = {a};
  return t.apply(OpKind::kRowSoftmax, ops);
}

namespace {
ValueId reduce(Tape& t, OpKind op, ValueId a, int axis) {
  OpAttrs attrs;
  attrs.axis = axis;
  ValueId ops[] = {a};
  return t.apply(op, ops, attrs);
}
}  // namespace

ValueId sum_axis(Tape& t, ValueId a, int axis) { return reduce(t, OpKind::kSumAxis, a, axis); }
ValueId mean_axis(Tape& t, ValueId a, int axis) { return reduce(t, OpKind::kMeanAxis, a, axis); }
ValueId max_axis(Tape& t, ValueId a, int axis) { return reduce(t, OpKind::kMaxAxis, a, axis); }

ValueId concat(Tape& t, std::span<const ValueId> parts, int axis) {
  OpAttrs attrs;
  attrs.axis = axis;
  return t.apply(OpKind::kConcat, parts, attrs);
}

ValueId slice(Tape& t, ValueId a, int axis, int start, int length) {
  OpAttrs attrs;
  attrs.axis = axis;
  attrs.start = start;
  attrs.length = length;
  ValueId ops[] = {a};
  return t.apply(OpKind::kSlice, ops, attrs);
}

ValueId sum_all(Tape& t, ValueId a) {
  if (t.value(a).rank() == 1) return sum_axis(t, a, 0);
  return sum_axis(t, sum_axis(t, a, 1), 0);
}

double check_gradients(const BuildScalarFn& build, std::span<const NumericArray> params, double step) {
  if (step <= 0.0) throw std::invalid_argument("check_gradients: step must be positive");

  auto build_tape = [&](Tape& t) {
    std::vector<ValueId> ids;
    ids.reserve(params.size());
    for (const NumericArray& p : params) ids.push_back(t.parameter(p));
    ValueId root = build(t, ids);
    if (!t.value(root).is_scalar()) {
      throw std::invalid_argument("check_gradients: build must produce a scalar root");
    }
    return std::pair{std::move(ids), root};
  };

  Tape analytic;
  auto [ids, root] = build_tape(analytic);

  Tape probe;
  auto [probe_ids, probe_root] = build_tape(probe);
  double r1 = analytic.value(root).value();
  double r2 = probe.value(probe_root).value();
  if (std::memcmp(&r1, &r2, sizeof(double)) != 0) {
    throw std::invalid_argument("check_gradients: build is not deterministic (forward passes disagree)");
  }

  analytic.backward(root);

  double max_rel_err = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const NumericArray& grad = analytic.adjoint(ids[p]);
    NumericArray perturbed = params[p];
    for (Eigen::Index j = 0; j < perturbed.size(); ++j) {
      const double original = perturbed.data()[j];
      perturbed.data()[j] = original + step;
      probe.set_leaf_value(probe_ids[p], perturbed);
      probe.replay();
      double f_plus = probe.value(probe_root).value();
      perturbed.data()[j] = original - step;
      probe.set_leaf_value(probe_ids[p], perturbed);
      probe.replay();
      double f_minus = probe.value(probe_root).value();
      perturbed.data()[j] = original;
      double fd = (f_plus - f_minus) / (2.0 * step);
      double analytic_g = grad.data()[j];
      double rel = std::abs(analytic_g - fd) / std::max({1.0, std::abs(analytic_g), std::abs(fd)});
      max_rel_err = std::max(max_rel_err, rel);
    }
    probe.set_leaf_value(probe_ids[p], params[p]);
  }
  probe.replay();
  return max_rel_err;
}

}  // namespace pjem
