#pragma once

// Define-by-run reverse-mode automatic differentiation over dense tensors.
//
// A Graph is a tape: every operation appends one node whose inputs already
// exist, so node order is a topological order. Parameters enter the tape as
// leaves that reference caller-owned Tensors; backward() accumulates into
// their gradient buffers. A Graph and its nodes belong to one thread.

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "evhan/tensor.hpp"

namespace evhan::ad {

class Graph;

/// Handle to a node on a Graph tape.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;
};

enum class Unary { sigmoid, tanh, exp };
enum class Binary { add, sub, mul };

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Registers a trainable leaf. Registering the same tensor twice returns
  /// the same node. The tensor must outlive the graph.
  Var param(Tensor& t);
  /// Non-trainable input; the graph keeps its own copy.
  Var constant(Tensor t);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward() loss with respect to v (zeros if v did
  /// not influence the loss).
  std::vector<double> grad(Var v) const;

  /// Propagates d(loss)/d(node) through the tape and adds the leaf parts
  /// into each registered parameter's grad buffer. Parameter gradients are
  /// never reset here, so repeated calls accumulate.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  friend Var matmul(Var a, Var b);
  friend Var elementwise(Unary op, Var a);
  friend Var elementwise(Binary op, Var a, Var b);
  friend Var add_bias(Var a, Var bias);
  friend Var scale(Var a, double s);
  friend Var masked_softmax(Var scores, std::span<const std::uint8_t> mask);
  friend Var concat(std::span<const Var> parts, std::size_t axis);
  friend Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
  friend Var sum(Var a);
  friend Var reshape(Var a, Shape shape);
  friend Var gather_rows(Var table, std::span<const std::int64_t> rows);
  friend Var softmax_cross_entropy(Var logits, std::size_t label);

 private:
  enum class Op {
    param, constant, matmul, add, sub, mul, sigmoid, tanh, exp, add_bias, scale,
    masked_softmax, concat, slice, sum, reshape, gather_rows, softmax_xent
  };

  struct Node {
    Op op = Op::constant;
    Tensor value;
    Tensor* param = nullptr;
    std::vector<std::size_t> inputs;
    bool requires_grad = false;
    // op-specific attributes
    std::vector<std::uint8_t> mask;
    std::vector<std::int64_t> rows;
    std::size_t axis = 0;
    std::size_t begin = 0;
    double factor = 0.0;
  };

  std::size_t push(Node node);
  const Tensor& node_value(std::size_t id) const;
  void backprop_node(std::size_t id, std::vector<std::vector<double>>& grads) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> param_ids_;
  std::vector<std::vector<double>> last_grads_;
};

Var matmul(Var a, Var b);
Var elementwise(Unary op, Var a);
Var elementwise(Binary op, Var a, Var b);
/// Adds a rank-1 bias of the trailing extent to every leading-axis row.
Var add_bias(Var a, Var bias);
Var scale(Var a, double s);
/// Softmax over positions whose mask byte is non-zero; masked outputs are 0.
Var masked_softmax(Var scores, std::span<const std::uint8_t> mask);
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var sum(Var a);
Var reshape(Var a, Shape shape);
/// Row lookup into a rank-2 table; a negative index yields a zero row.
Var gather_rows(Var table, std::span<const std::int64_t> rows);
/// -log softmax(logits)[label] as a scalar node.
Var softmax_cross_entropy(Var logits, std::size_t label);

inline Var add(Var a, Var b) { return elementwise(Binary::add, a, b); }
inline Var sub(Var a, Var b) { return elementwise(Binary::sub, a, b); }
inline Var mul(Var a, Var b) { return elementwise(Binary::mul, a, b); }
inline Var sigmoid(Var a) { return elementwise(Unary::sigmoid, a); }
inline Var tanh(Var a) { return elementwise(Unary::tanh, a); }
inline Var exp(Var a) { return elementwise(Unary::exp, a); }
inline Var concat(Var a, Var b, std::size_t axis) {
  const Var parts[] = {a, b};
  return concat(parts, axis);
}

/// Splits a along axis into consecutive pieces of the given extents.
std::vector<Var> split(Var a, std::size_t axis, std::span<const std::size_t> extents);

}  // namespace evhan::ad
