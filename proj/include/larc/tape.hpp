#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "larc/tensor.hpp"

namespace larc::ad {

/// Handle to a tensor recorded on a Tape.
struct Var {
  std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
  bool valid() const { return id != std::numeric_limits<std::uint32_t>::max(); }
  bool operator==(const Var&) const = default;
};

/// Per-parameter gradient buffers, indexed by the slot passed to Tape::parameter.
using Gradients = std::vector<std::vector<double>>;

/// Append-only record of primitive tensor ops for reverse-mode differentiation.
///
/// Relation tensors (n×n or n×n×n) keep kMasked in repeated-index slots; every
/// op that reads them skips those slots, and their gradients stay zero.
class Tape {
 public:
  enum class Mode { kTrain, kInference };

  explicit Tape(Mode mode = Mode::kTrain) : mode_(mode) {}

  Var constant(Tensor value);
  /// Leaf whose gradient is accumulated into `grads[slot]` by backward().
  Var parameter(const Tensor& value, std::size_t slot);

  /// x: rows×in, w: in×out, b: out -> rows×out.
  Var affine(Var x, Var w, Var b);
  Var tanh(Var x);
  /// rows: r×d, vec: d -> r, scaled by `scale`.
  Var rowdot(Var rows, Var vec, double scale);
  /// Lays out values over the valid slots (lexicographic order) of an
  /// arity-2 or arity-3 relation over n objects.
  Var scatter_relation(Var values, std::size_t n, int arity);
  /// Elementwise min; ties route the gradient to `a`.
  Var minimum(Var a, Var b);
  Var softmax(Var v);
  Var masked_matvec(Var p, Var s);
  Var masked_bilinear(Var t, Var s1, Var s2);
  /// t[i,j,k] = max(a[i,j] + b[i,k], b[i,j] + a[i,k]).
  Var compose_max(Var a, Var b);

  Var cross_entropy(Var logits, std::size_t target);
  /// sum over i != j of (p[i,j] - p[j,i])^2.
  Var symmetry_loss(Var p);
  /// sum over i != j of relu(p[i,j]) * relu(p[j,i]).
  Var exclusivity_loss(Var p);
  /// sum of |t| over valid slots.
  Var sparsity_loss(Var t);
  /// sum_k weights[k] * terms[k] over scalar terms.
  Var weighted_sum(std::span<const Var> terms, std::span<const double> weights);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  std::string_view op_name(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const { return nodes_.size(); }
  Mode mode() const { return mode_; }

  /// Reverse pass from a scalar root, accumulating into `grads`. Throws
  /// ErrorCode::kNumericFailure naming the op when a gradient is not finite.
  void backward(Var root, Gradients& grads);

 private:
  struct Node {
    Tensor value;
    std::string_view op;
    bool requires_grad = false;
    std::size_t param_slot = std::numeric_limits<std::size_t>::max();
    std::function<void(Tape&, std::size_t)> backward;
  };

  Var push(Tensor value, std::string_view op, std::initializer_list<Var> inputs,
           std::function<void(Tape&, std::size_t)> backward);
  bool needs_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::vector<double>& grad(Var v);
  std::span<const double> grad_of_node(std::size_t id) const { return grads_[id]; }

  Mode mode_;
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

}  // namespace larc::ad
