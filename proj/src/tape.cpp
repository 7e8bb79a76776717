#include "larc/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "larc/error.hpp"
#include "larc/kernels.hpp"

namespace larc {

Tensor masked_relation(std::size_t n, int arity, double fill) {
  if (arity == 2) {
    Tensor t({n, n}, fill);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = kMasked;
    return t;
  }
  if (arity == 3) {
    Tensor t({n, n, n}, fill);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
          if (is_masked_slot(i, j, k)) t.at(i, j, k) = kMasked;
        }
      }
    }
    return t;
  }
  fail(ErrorCode::kInvalidArguments, "relation arity must be 2 or 3");
}

namespace ad {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kInvalidArguments, what);
}

void require_square(const Tensor& p, std::string_view op) {
  if (p.rank() != 2 || p.dim(0) != p.dim(1)) {
    fail(ErrorCode::kNonSquare, std::string(op) + ": expected a square relation matrix");
  }
}

template <typename Fn>
void for_valid_slots(const Tensor& t, Fn&& fn) {
  const std::size_t n = t.dim(0);
  if (t.rank() == 2) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) fn(i * n + j);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          if (!is_masked_slot(i, j, k)) fn((i * n + j) * n + k);
  }
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

Var Tape::push(Tensor value, std::string_view op, std::initializer_list<Var> inputs,
               std::function<void(Tape&, std::size_t)> backward) {
  Node node;
  node.value = std::move(value);
  node.op = op;
  if (mode_ == Mode::kTrain) {
    node.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                     [&](Var v) { return needs_grad(v); });
    if (node.requires_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::vector<double>& Tape::grad(Var v) {
  auto& g = grads_[v.id];
  if (g.empty()) g.assign(nodes_[v.id].value.size(), 0.0);
  return g;
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), "constant", false,
                        std::numeric_limits<std::size_t>::max(), {}});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::parameter(const Tensor& value, std::size_t slot) {
  nodes_.push_back(Node{value, "parameter", mode_ == Mode::kTrain, slot, {}});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::affine(Var x, Var w, Var b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  require(xv.rank() == 2 && wv.rank() == 2 && bv.rank() == 1, "affine: bad ranks");
  const std::size_t rows = xv.dim(0), in = xv.dim(1), out = wv.dim(1);
  require(wv.dim(0) == in && bv.dim(0) == out, "affine: shape mismatch");
  Tensor y({rows, out});
  kernels::affine(xv.data, rows, in, wv.data, bv.data, out, y.data);
  return push(std::move(y), "affine", {x, w, b}, [=](Tape& t, std::size_t self) {
    const auto& dy = t.grads_[self];
    if (t.needs_grad(x)) {
      kernels::affine_grad_input(dy, rows, out, t.value(w).data, in, t.grad(x));
    }
    if (t.needs_grad(w) || t.needs_grad(b)) {
      auto& dw = t.grad(w);
      auto& db = t.grad(b);
      kernels::affine_grad_params(t.value(x).data, dy, rows, in, out, dw, db);
    }
  });
}

Var Tape::tanh(Var x) {
  Tensor y = value(x);
  for (double& v : y.data) v = std::tanh(v);
  return push(std::move(y), "tanh", {x}, [=](Tape& t, std::size_t self) {
    const auto& dy = t.grads_[self];
    const auto& yv = t.nodes_[self].value.data;
    auto& dx = t.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * (1.0 - yv[i] * yv[i]);
  });
}

Var Tape::rowdot(Var rows, Var vec, double scale) {
  const Tensor& f = value(rows);
  const Tensor& e = value(vec);
  require(f.rank() == 2 && e.rank() == 1 && f.dim(1) == e.dim(0), "rowdot: shape mismatch");
  const std::size_t r = f.dim(0), d = f.dim(1);
  Tensor y({r});
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) acc += f.data[i * d + k] * e.data[k];
    y.data[i] = acc * scale;
  }
  return push(std::move(y), "rowdot", {rows, vec}, [=](Tape& t, std::size_t self) {
    const auto& dy = t.grads_[self];
    if (t.needs_grad(rows)) {
      auto& df = t.grad(rows);
      const auto& ev = t.value(vec).data;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t k = 0; k < d; ++k) df[i * d + k] += scale * dy[i] * ev[k];
    }
    if (t.needs_grad(vec)) {
      auto& de = t.grad(vec);
      const auto& fv = t.value(rows).data;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t k = 0; k < d; ++k) de[k] += scale * dy[i] * fv[i * d + k];
    }
  });
}

Var Tape::scatter_relation(Var values, std::size_t n, int arity) {
  const Tensor& v = value(values);
  require(v.rank() == 1 && v.size() == valid_relation_slots(n, arity),
          "scatter_relation: value count does not match valid slots");
  Tensor out = masked_relation(n, arity);
  std::vector<std::size_t> slots;
  slots.reserve(v.size());
  for_valid_slots(out, [&](std::size_t idx) { slots.push_back(idx); });
  for (std::size_t r = 0; r < slots.size(); ++r) out.data[slots[r]] = v.data[r];
  return push(std::move(out), "scatter_relation", {values},
              [=, slots = std::move(slots)](Tape& t, std::size_t self) {
                const auto& dy = t.grads_[self];
                auto& dv = t.grad(values);
                for (std::size_t r = 0; r < slots.size(); ++r) dv[r] += dy[slots[r]];
              });
}

Var Tape::minimum(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require(av.shape == bv.shape, "minimum: shape mismatch");
  Tensor y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] = std::min(av.data[i], bv.data[i]);
  return push(std::move(y), "minimum", {a, b}, [=](Tape& t, std::size_t self) {
    const auto& dy = t.grads_[self];
    const auto& x = t.value(a).data;
    const auto& z = t.value(b).data;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      if (x[i] <= z[i]) {
        if (t.needs_grad(a)) t.grad(a)[i] += dy[i];
      } else if (t.needs_grad(b)) {
        t.grad(b)[i] += dy[i];
      }
    }
  });
}

Var Tape::softmax(Var v) {
  const Tensor& x = value(v);
  require(x.rank() == 1 && x.size() > 0, "softmax: expected a non-empty vector");
  Tensor y = x;
  const double m = *std::max_element(x.data.begin(), x.data.end());
  double z = 0.0;
  for (double& e : y.data) {
    e = std::exp(e - m);
    z += e;
  }
  for (double& e : y.data) e /= z;
  return push(std::move(y), "softmax", {v}, [=](Tape& t, std::size_t self) {
    const auto& dy = t.grads_[self];
    const auto& s = t.nodes_[self].value.data;
    double dot = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) dot += dy[i] * s[i];
    auto& dx = t.grad(v);
    for (std::size_t i = 0; i < s.size(); ++i) dx[i] += s[i] * (dy[i] - dot);
  });
}

Var Tape::masked_matvec(Var p, Var s) {
  const Tensor& pv = value(p);
  const Tensor& sv = value(s);
  require_square(pv, "masked_matvec");
  const std::size_t n = pv.dim(0);
  require(sv.rank() == 1 && sv.size() == n, "masked_matvec: vector length mismatch");
  Tensor y({n});
  kernels::masked_matvec(pv.data, n, sv.data, y.data);
  return push(std::move(y), "masked_matvec", {p, s}, [=](Tape& t, std::size_t self) {
    std::vector<double> scratch_p;
    std::vector<double> scratch_s;
    auto& dp = t.needs_grad(p) ? t.grad(p) : (scratch_p.assign(n * n, 0.0), scratch_p);
    auto& ds = t.needs_grad(s) ? t.grad(s) : (scratch_s.assign(n, 0.0), scratch_s);
    kernels::masked_matvec_grad(t.value(p).data, n, t.value(s).data, t.grads_[self], dp, ds);
  });
}

Var Tape::masked_bilinear(Var tt, Var s1, Var s2) {
  const Tensor& tv = value(tt);
  require(tv.rank() == 3 && tv.dim(0) == tv.dim(1) && tv.dim(1) == tv.dim(2),
          "masked_bilinear: expected an n×n×n tensor");
  const std::size_t n = tv.dim(0);
  require(value(s1).size() == n && value(s2).size() == n,
          "masked_bilinear: vector length mismatch");
  Tensor y({n});
  kernels::masked_bilinear(tv.data, n, value(s1).data, value(s2).data, y.data);
  return push(std::move(y), "masked_bilinear", {tt, s1, s2},
              [=](Tape& t, std::size_t self) {
                std::vector<double> st, sa, sb;
                auto& dt = t.needs_grad(tt) ? t.grad(tt) : (st.assign(n * n * n, 0.0), st);
                auto& d1 = t.needs_grad(s1) ? t.grad(s1) : (sa.assign(n, 0.0), sa);
                auto& d2 = t.needs_grad(s2) ? t.grad(s2) : (sb.assign(n, 0.0), sb);
                kernels::masked_bilinear_grad(t.value(tt).data, n, t.value(s1).data,
                                              t.value(s2).data, t.grads_[self], dt, d1, d2);
              });
}

Var Tape::compose_max(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_square(av, "compose_max");
  require(av.shape == bv.shape, "compose_max: shape mismatch");
  const std::size_t n = av.dim(0);
  Tensor y({n, n, n});
  std::vector<std::uint8_t> branch(n * n * n);
  kernels::compose_max(av.data, bv.data, n, y.data, branch);
  return push(std::move(y), "compose_max", {a, b},
              [=, branch = std::move(branch)](Tape& t, std::size_t self) {
                const auto& dy = t.grads_[self];
                std::vector<double> sa, sb;
                auto& da = t.needs_grad(a) ? t.grad(a) : (sa.assign(n * n, 0.0), sa);
                auto& db = t.needs_grad(b) ? t.grad(b) : (sb.assign(n * n, 0.0), sb);
                for (std::size_t i = 0; i < n; ++i)
                  for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t k = 0; k < n; ++k) {
                      if (is_masked_slot(i, j, k)) continue;
                      const std::size_t idx = (i * n + j) * n + k;
                      const double g = dy[idx];
                      if (branch[idx] == 0) {
                        da[i * n + j] += g;
                        db[i * n + k] += g;
                      } else {
                        db[i * n + j] += g;
                        da[i * n + k] += g;
                      }
                    }
              });
}

Var Tape::cross_entropy(Var logits, std::size_t target) {
  const Tensor& x = value(logits);
  require(x.rank() == 1, "cross_entropy: expected a vector");
  if (target >= x.size()) {
    fail(ErrorCode::kOutOfRange, "cross_entropy: answer index " + std::to_string(target) +
                                     " out of range for " + std::to_string(x.size()) +
                                     " objects");
  }
  const double m = *std::max_element(x.data.begin(), x.data.end());
  double z = 0.0;
  for (double v : x.data) z += std::exp(v - m);
  const double lse = m + std::log(z);
  return push(Tensor::scalar(lse - x.data[target]), "cross_entropy", {logits},
              [=](Tape& t, std::size_t self) {
                const double g = t.grads_[self][0];
                const auto& xv = t.value(logits).data;
                auto& dx = t.grad(logits);
                for (std::size_t i = 0; i < xv.size(); ++i) {
                  const double p = std::exp(xv[i] - lse);
                  dx[i] += g * (p - (i == target ? 1.0 : 0.0));
                }
              });
}

Var Tape::symmetry_loss(Var p) {
  const Tensor& pv = value(p);
  require_square(pv, "symmetry_loss");
  const std::size_t n = pv.dim(0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        const double d = pv.at(i, j) - pv.at(j, i);
        loss += d * d;
      }
  return push(Tensor::scalar(loss), "symmetry_loss", {p}, [=](Tape& t, std::size_t self) {
    const double g = t.grads_[self][0];
    const Tensor& v = t.value(p);
    auto& dp = t.grad(p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) dp[i * n + j] += g * 4.0 * (v.at(i, j) - v.at(j, i));
  });
}

Var Tape::exclusivity_loss(Var p) {
  const Tensor& pv = value(p);
  require_square(pv, "exclusivity_loss");
  const std::size_t n = pv.dim(0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) loss += relu(pv.at(i, j)) * relu(pv.at(j, i));
  return push(Tensor::scalar(loss), "exclusivity_loss", {p},
              [=](Tape& t, std::size_t self) {
                const double g = t.grads_[self][0];
                const Tensor& v = t.value(p);
                auto& dp = t.grad(p);
                for (std::size_t i = 0; i < n; ++i)
                  for (std::size_t j = 0; j < n; ++j)
                    if (i != j && v.at(i, j) > 0.0) {
                      dp[i * n + j] += g * 2.0 * relu(v.at(j, i));
                    }
              });
}

Var Tape::sparsity_loss(Var tt) {
  const Tensor& tv = value(tt);
  require((tv.rank() == 2 || tv.rank() == 3) &&
              std::all_of(tv.shape.begin(), tv.shape.end(),
                          [&](std::size_t d) { return d == tv.dim(0); }),
          "sparsity_loss: expected an n×n or n×n×n relation tensor");
  double loss = 0.0;
  for_valid_slots(tv, [&](std::size_t idx) { loss += std::abs(tv.data[idx]); });
  return push(Tensor::scalar(loss), "sparsity_loss", {tt}, [=](Tape& t, std::size_t self) {
    const double g = t.grads_[self][0];
    const Tensor& v = t.value(tt);
    auto& dt = t.grad(tt);
    for_valid_slots(v, [&](std::size_t idx) {
      const double x = v.data[idx];
      dt[idx] += g * (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
    });
  });
}

Var Tape::weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
  require(terms.size() == weights.size(), "weighted_sum: size mismatch");
  double total = 0.0;
  bool any_grad = false;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    require(value(terms[k]).size() == 1, "weighted_sum: terms must be scalars");
    total += weights[k] * value(terms[k]).data[0];
    any_grad = any_grad || needs_grad(terms[k]);
  }
  std::vector<Var> ts(terms.begin(), terms.end());
  std::vector<double> ws(weights.begin(), weights.end());
  Node node;
  node.value = Tensor::scalar(total);
  node.op = "weighted_sum";
  node.requires_grad = mode_ == Mode::kTrain && any_grad;
  if (node.requires_grad) {
    node.backward = [ts = std::move(ts), ws = std::move(ws)](Tape& t, std::size_t self) {
      const double g = t.grads_[self][0];
      for (std::size_t k = 0; k < ts.size(); ++k) {
        if (t.needs_grad(ts[k])) t.grad(ts[k])[0] += g * ws[k];
      }
    };
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::backward(Var root, Gradients& grads) {
  if (mode_ != Mode::kTrain) {
    fail(ErrorCode::kInvalidArguments, "backward() on an inference tape");
  }
  require(value(root).size() == 1, "backward: root must be a scalar");
  grads_.assign(nodes_.size(), {});
  if (!needs_grad(root)) return;
  grads_[root.id] = {1.0};
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    auto& g = grads_[id];
    if (g.empty() || !node.requires_grad) continue;
    for (double v : g) {
      if (!std::isfinite(v)) {
        fail(ErrorCode::kNumericFailure,
             "non-finite gradient flowing out of op '" + std::string(node.op) + "'");
      }
    }
    if (node.param_slot != std::numeric_limits<std::size_t>::max()) {
      if (grads.size() <= node.param_slot) grads.resize(node.param_slot + 1);
      auto& out = grads[node.param_slot];
      if (out.empty()) out.assign(g.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) out[i] += g[i];
    } else if (node.backward) {
      node.backward(*this, id);
    }
  }
}

}  // namespace ad
}  // namespace larc
