#include "evhan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "evhan/errors.hpp"

namespace evhan::ad {
namespace {

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw UsageError("variable is not attached to a graph");
  return *a.graph;
}

Graph& graph_of(Var a, Var b) {
  if (a.graph != b.graph) throw UsageError("variables belong to different graphs");
  return graph_of(a);
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Block decomposition used by concat/slice: shape = [outer, extent, inner].
struct AxisBlocks {
  std::size_t outer = 1;
  std::size_t inner = 1;
};

AxisBlocks blocks_around(const Shape& shape, std::size_t axis) {
  AxisBlocks b;
  for (std::size_t i = 0; i < axis; ++i) b.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) b.inner *= shape[i];
  return b;
}

}  // namespace

std::size_t Graph::push(Node node) {
  for (std::size_t in : node.inputs) {
    if (nodes_[in].requires_grad) node.requires_grad = true;
  }
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

const Tensor& Graph::node_value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.param != nullptr ? *n.param : n.value;
}

const Tensor& Graph::value(Var v) const {
  if (v.graph != this) throw UsageError("variable belongs to another graph");
  return node_value(v.id);
}

Var Graph::param(Tensor& t) {
  if (auto it = param_ids_.find(&t); it != param_ids_.end()) return {this, it->second};
  Node n;
  n.op = Op::param;
  n.param = &t;
  n.requires_grad = true;
  const std::size_t id = push(std::move(n));
  param_ids_.emplace(&t, id);
  return {this, id};
}

Var Graph::constant(Tensor t) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(t);
  return {this, push(std::move(n))};
}

std::vector<double> Graph::grad(Var v) const {
  if (v.graph != this) throw UsageError("variable belongs to another graph");
  if (v.id < last_grads_.size() && !last_grads_[v.id].empty()) return last_grads_[v.id];
  return std::vector<double>(node_value(v.id).size(), 0.0);
}

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = g.node_value(a.id);
  const Tensor& y = g.node_value(b.id);
  if (x.rank() != 2 || y.rank() != 2 || x.dim(1) != y.dim(0)) {
    throw ShapeError("matmul shape mismatch: " + shape_to_string(x.shape()) + " x " +
                     shape_to_string(y.shape()));
  }
  const std::size_t m = x.dim(0), k = x.dim(1), n = y.dim(1);
  Tensor out({m, n});
  const double* xp = x.data();
  const double* yp = y.data();
  double* op = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = xp[i * k + p];
      const double* yrow = yp + p * n;
      double* orow = op + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += xv * yrow[j];
    }
  }
  Graph::Node node;
  node.op = Graph::Op::matmul;
  node.value = std::move(out);
  node.inputs = {a.id, b.id};
  return {&g, g.push(std::move(node))};
}

Var elementwise(Unary op, Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = g.node_value(a.id);
  Tensor out(x.shape());
  Graph::Node node;
  switch (op) {
    case Unary::sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid_value(x[i]);
      node.op = Graph::Op::sigmoid;
      break;
    case Unary::tanh:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
      node.op = Graph::Op::tanh;
      break;
    case Unary::exp:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i]);
      node.op = Graph::Op::exp;
      break;
  }
  node.value = std::move(out);
  node.inputs = {a.id};
  return {&g, g.push(std::move(node))};
}

Var elementwise(Binary op, Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = g.node_value(a.id);
  const Tensor& y = g.node_value(b.id);
  if (x.shape() != y.shape()) {
    throw ShapeError("elementwise shape mismatch: " + shape_to_string(x.shape()) + " vs " +
                     shape_to_string(y.shape()));
  }
  Tensor out(x.shape());
  Graph::Node node;
  switch (op) {
    case Binary::add:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
      node.op = Graph::Op::add;
      break;
    case Binary::sub:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
      node.op = Graph::Op::sub;
      break;
    case Binary::mul:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
      node.op = Graph::Op::mul;
      break;
  }
  node.value = std::move(out);
  node.inputs = {a.id, b.id};
  return {&g, g.push(std::move(node))};
}

Var add_bias(Var a, Var bias) {
  Graph& g = graph_of(a, bias);
  const Tensor& x = g.node_value(a.id);
  const Tensor& b = g.node_value(bias.id);
  const std::size_t n = x.shape().back();
  if (b.rank() != 1 || b.dim(0) != n) {
    throw ShapeError("add_bias shape mismatch: " + shape_to_string(x.shape()) + " + " +
                     shape_to_string(b.shape()));
  }
  Tensor out(x.shape(), std::vector<double>(x.values().begin(), x.values().end()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i % n];
  Graph::Node node;
  node.op = Graph::Op::add_bias;
  node.value = std::move(out);
  node.inputs = {a.id, bias.id};
  return {&g, g.push(std::move(node))};
}

Var scale(Var a, double s) {
  Graph& g = graph_of(a);
  const Tensor& x = g.node_value(a.id);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * x[i];
  Graph::Node node;
  node.op = Graph::Op::scale;
  node.value = std::move(out);
  node.inputs = {a.id};
  node.factor = s;
  return {&g, g.push(std::move(node))};
}

Var masked_softmax(Var scores, std::span<const std::uint8_t> mask) {
  Graph& g = graph_of(scores);
  const Tensor& x = g.node_value(scores.id);
  if (mask.size() != x.size()) {
    throw ShapeError("masked_softmax mask of length " + std::to_string(mask.size()) +
                     " for scores " + shape_to_string(x.shape()));
  }
  double max_score = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask[i]) {
      max_score = std::max(max_score, x[i]);
      any = true;
    }
  }
  if (!any) throw UsageError("masked_softmax: every position is masked");
  Tensor out(x.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask[i]) {
      out[i] = std::exp(x[i] - max_score);
      total += out[i];
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] /= total;
  Graph::Node node;
  node.op = Graph::Op::masked_softmax;
  node.value = std::move(out);
  node.inputs = {scores.id};
  node.mask.assign(mask.begin(), mask.end());
  return {&g, g.push(std::move(node))};
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw UsageError("concat of zero tensors");
  Graph& g = graph_of(parts[0]);
  const Shape& first = g.node_value(parts[0].id).shape();
  if (axis >= first.size()) throw ShapeError("concat axis out of range for " + shape_to_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    graph_of(parts[0], p);
    const Shape& s = g.node_value(p.id).shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) ok = false;
    }
    if (!ok) {
      throw ShapeError("concat shape mismatch: " + shape_to_string(first) + " vs " + shape_to_string(s));
    }
    out_shape[axis] += s[axis];
  }
  const AxisBlocks blk = blocks_around(out_shape, axis);
  Tensor out(out_shape);
  const std::size_t out_row = out_shape[axis] * blk.inner;
  std::size_t offset = 0;
  Graph::Node node;
  for (const Var& p : parts) {
    const Tensor& t = g.node_value(p.id);
    const std::size_t chunk = t.dim(axis) * blk.inner;
    for (std::size_t o = 0; o < blk.outer; ++o) {
      std::copy_n(t.data() + o * chunk, chunk, out.data() + o * out_row + offset);
    }
    offset += chunk;
    node.inputs.push_back(p.id);
  }
  node.op = Graph::Op::concat;
  node.value = std::move(out);
  node.axis = axis;
  return {&g, g.push(std::move(node))};
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(a);
  const Tensor& x = g.node_value(a.id);
  if (axis >= x.rank() || begin >= end || end > x.dim(axis)) {
    throw ShapeError("slice [" + std::to_string(begin) + "," + std::to_string(end) + ") on axis " +
                     std::to_string(axis) + " of " + shape_to_string(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const AxisBlocks blk = blocks_around(x.shape(), axis);
  Tensor out(out_shape);
  const std::size_t in_row = x.dim(axis) * blk.inner;
  const std::size_t chunk = (end - begin) * blk.inner;
  for (std::size_t o = 0; o < blk.outer; ++o) {
    std::copy_n(x.data() + o * in_row + begin * blk.inner, chunk, out.data() + o * chunk);
  }
  Graph::Node node;
  node.op = Graph::Op::slice;
  node.value = std::move(out);
  node.inputs = {a.id};
  node.axis = axis;
  node.begin = begin;
  return {&g, g.push(std::move(node))};
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = g.node_value(a.id);
  double total = 0.0;
  for (double v : x.values()) total += v;
  Graph::Node node;
  node.op = Graph::Op::sum;
  node.value = Tensor::scalar(total);
  node.inputs = {a.id};
  return {&g, g.push(std::move(node))};
}

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of(a);
  const Tensor& x = g.node_value(a.id);
  if (shape_size(shape) != x.size()) {
    throw ShapeError("cannot reshape " + shape_to_string(x.shape()) + " to " + shape_to_string(shape));
  }
  Graph::Node node;
  node.op = Graph::Op::reshape;
  node.value = Tensor(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()));
  node.inputs = {a.id};
  return {&g, g.push(std::move(node))};
}

Var gather_rows(Var table, std::span<const std::int64_t> rows) {
  Graph& g = graph_of(table);
  const Tensor& t = g.node_value(table.id);
  if (t.rank() != 2) throw ShapeError("gather_rows needs a rank-2 table, got " + shape_to_string(t.shape()));
  if (rows.empty()) throw ShapeError("gather_rows with no rows");
  const std::size_t d = t.dim(1);
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0) continue;
    if (static_cast<std::size_t>(rows[i]) >= t.dim(0)) {
      throw ShapeError("gather_rows index " + std::to_string(rows[i]) + " outside table " +
                       shape_to_string(t.shape()));
    }
    std::copy_n(t.data() + static_cast<std::size_t>(rows[i]) * d, d, out.data() + i * d);
  }
  Graph::Node node;
  node.op = Graph::Op::gather_rows;
  node.value = std::move(out);
  node.inputs = {table.id};
  node.rows.assign(rows.begin(), rows.end());
  return {&g, g.push(std::move(node))};
}

Var softmax_cross_entropy(Var logits, std::size_t label) {
  Graph& g = graph_of(logits);
  const Tensor& z = g.node_value(logits.id);
  if (label >= z.size()) {
    throw UsageError("label " + std::to_string(label) + " out of range for " + std::to_string(z.size()) +
                     " classes");
  }
  const double max_z = *std::max_element(z.values().begin(), z.values().end());
  double total = 0.0;
  for (double v : z.values()) total += std::exp(v - max_z);
  const double loss = std::log(total) + max_z - z[label];
  Graph::Node node;
  node.op = Graph::Op::softmax_xent;
  node.value = Tensor::scalar(loss);
  node.inputs = {logits.id};
  node.begin = label;
  return {&g, g.push(std::move(node))};
}

std::vector<Var> split(Var a, std::size_t axis, std::span<const std::size_t> extents) {
  std::vector<Var> out;
  std::size_t begin = 0;
  for (std::size_t e : extents) {
    out.push_back(slice(a, axis, begin, begin + e));
    begin += e;
  }
  if (begin != graph_of(a).value(a).dim(axis)) {
    throw ShapeError("split extents do not cover axis " + std::to_string(axis));
  }
  return out;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw UsageError("loss belongs to another graph");
  if (node_value(loss.id).size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_to_string(node_value(loss.id).shape()));
  }
  std::vector<std::vector<double>> grads(nodes_.size());
  grads[loss.id].assign(1, 1.0);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    if (grads[id].empty() || !nodes_[id].requires_grad) continue;
    backprop_node(id, grads);
  }
  for (std::size_t id = 0; id <= loss.id; ++id) {
    const Node& n = nodes_[id];
    if (n.op != Op::param || grads[id].empty()) continue;
    std::span<double> dst = n.param->grad();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += grads[id][i];
  }
  last_grads_ = std::move(grads);
}

void Graph::backprop_node(std::size_t id, std::vector<std::vector<double>>& grads) const {
  const Node& n = nodes_[id];
  const std::vector<double>& dy = grads[id];
  auto acc = [&](std::size_t input) -> std::vector<double>* {
    if (!nodes_[input].requires_grad) return nullptr;
    std::vector<double>& g = grads[input];
    if (g.empty()) g.assign(node_value(input).size(), 0.0);
    return &g;
  };
  const Tensor& y = n.value;

  switch (n.op) {
    case Op::param:
    case Op::constant:
      return;
    case Op::matmul: {
      const Tensor& a = node_value(n.inputs[0]);
      const Tensor& b = node_value(n.inputs[1]);
      const std::size_t m = a.dim(0), k = a.dim(1), cols = b.dim(1);
      if (auto* da = acc(n.inputs[0])) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols; ++j) s += dy[i * cols + j] * b[p * cols + j];
            (*da)[i * k + p] += s;
          }
        }
      }
      if (auto* db = acc(n.inputs[1])) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            for (std::size_t j = 0; j < cols; ++j) (*db)[p * cols + j] += av * dy[i * cols + j];
          }
        }
      }
      return;
    }
    case Op::add:
    case Op::sub: {
      if (auto* da = acc(n.inputs[0])) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i];
      }
      if (auto* db = acc(n.inputs[1])) {
        const double sign = n.op == Op::add ? 1.0 : -1.0;
        for (std::size_t i = 0; i < dy.size(); ++i) (*db)[i] += sign * dy[i];
      }
      return;
    }
    case Op::mul: {
      const Tensor& a = node_value(n.inputs[0]);
      const Tensor& b = node_value(n.inputs[1]);
      if (auto* da = acc(n.inputs[0])) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i] * b[i];
      }
      if (auto* db = acc(n.inputs[1])) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*db)[i] += dy[i] * a[i];
      }
      return;
    }
    case Op::sigmoid: {
      if (auto* da = acc(n.inputs[0])) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i] * y[i] * (1.0 - y[i]);
      }
      return;
    }
    case Op::tanh: {
      if (auto* da = acc(n.inputs[0])) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i] * (1.0 - y[i] * y[i]);
      }
      return;
    }
    case Op::exp: {
      if (auto* da = acc(n.inputs[0])) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i] * y[i];
      }
      return;
    }
    case Op::add_bias: {
      if (auto* da = acc(n.inputs[0])) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i];
      }
      if (auto* db = acc(n.inputs[1])) {
        const std::size_t width = db->size();
        for (std::size_t i = 0; i < dy.size(); ++i) (*db)[i % width] += dy[i];
      }
      return;
    }
    case Op::scale: {
      if (auto* da = acc(n.inputs[0])) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += n.factor * dy[i];
      }
      return;
    }
    case Op::masked_softmax: {
      if (auto* da = acc(n.inputs[0])) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dy.size(); ++i) {
          if (n.mask[i]) dot += y[i] * dy[i];
        }
        for (std::size_t i = 0; i < dy.size(); ++i) {
          if (n.mask[i]) (*da)[i] += y[i] * (dy[i] - dot);
        }
      }
      return;
    }
    case Op::concat: {
      const AxisBlocks blk = blocks_around(y.shape(), n.axis);
      const std::size_t out_row = y.dim(n.axis) * blk.inner;
      std::size_t offset = 0;
      for (std::size_t in : n.inputs) {
        const std::size_t chunk = node_value(in).dim(n.axis) * blk.inner;
        if (auto* da = acc(in)) {
          for (std::size_t o = 0; o < blk.outer; ++o) {
            for (std::size_t c = 0; c < chunk; ++c) (*da)[o * chunk + c] += dy[o * out_row + offset + c];
          }
        }
        offset += chunk;
      }
      return;
    }
    case Op::slice: {
      if (auto* da = acc(n.inputs[0])) {
        const Tensor& x = node_value(n.inputs[0]);
        const AxisBlocks blk = blocks_around(x.shape(), n.axis);
        const std::size_t in_row = x.dim(n.axis) * blk.inner;
        const std::size_t chunk = y.dim(n.axis) * blk.inner;
        for (std::size_t o = 0; o < blk.outer; ++o) {
          for (std::size_t c = 0; c < chunk; ++c) {
            (*da)[o * in_row + n.begin * blk.inner + c] += dy[o * chunk + c];
          }
        }
      }
      return;
    }
    case Op::sum: {
      if (auto* da = acc(n.inputs[0])) {
        for (double& v : *da) v += dy[0];
      }
      return;
    }
    case Op::reshape: {
      if (auto* da = acc(n.inputs[0])) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*da)[i] += dy[i];
      }
      return;
    }
    case Op::gather_rows: {
      if (auto* da = acc(n.inputs[0])) {
        const std::size_t d = y.dim(1);
        for (std::size_t i = 0; i < n.rows.size(); ++i) {
          if (n.rows[i] < 0) continue;
          const std::size_t r = static_cast<std::size_t>(n.rows[i]);
          for (std::size_t c = 0; c < d; ++c) (*da)[r * d + c] += dy[i * d + c];
        }
      }
      return;
    }
    case Op::softmax_xent: {
      if (auto* da = acc(n.inputs[0])) {
        const Tensor& z = node_value(n.inputs[0]);
        const double max_z = *std::max_element(z.values().begin(), z.values().end());
        double total = 0.0;
        for (double v : z.values()) total += std::exp(v - max_z);
        for (std::size_t i = 0; i < z.size(); ++i) {
          const double p = std::exp(z[i] - max_z) / total;
          (*da)[i] += dy[0] * (p - (i == n.begin ? 1.0 : 0.0));
        }
      }
      return;
    }
  }
  throw InvariantError("unhandled node kind in backward");
}

}  // namespace evhan::ad
