#pragma once

// Dense inner loops shared by the encoders, the executor and the tape.
//
// Every kernel exists twice: `serial::` is the plain reference, `parallel::`
// distributes the outer loop with OpenMP. Each output element is accumulated
// in the same order in both versions, so results are bit-identical and the
// worker count never changes a number.

#include <cstddef>
#include <cstdint>
#include <span>

namespace larc::kernels {

enum class Policy { kSerial, kParallel };

void set_policy(Policy policy);
Policy policy();

/// Number of OpenMP workers available to `parallel::` kernels (1 without OpenMP).
int max_workers();
void set_max_workers(int workers);

/// Geometry slots appended to each pair-encoder input row: Δcenter (3) + distance.
inline constexpr std::size_t kPairGeometry = 4;
/// Geometry slots appended to each triple-encoder input row: two Δcenters + two distances.
inline constexpr std::size_t kTripleGeometry = 8;

#define LARC_KERNEL_SET                                                        \
  /* y[r,o] = b[o] + sum_k x[r,k] w[k,o] */                                    \
  void affine(std::span<const double> x, std::size_t rows, std::size_t in,     \
              std::span<const double> w, std::span<const double> b,            \
              std::size_t out, std::span<double> y);                           \
  /* dx[r,k] += sum_o dy[r,o] w[k,o] */                                        \
  void affine_grad_input(std::span<const double> dy, std::size_t rows,         \
                         std::size_t out, std::span<const double> w,           \
                         std::size_t in, std::span<double> dx);                \
  /* dw[k,o] += sum_r x[r,k] dy[r,o];  db[o] += sum_r dy[r,o] */               \
  void affine_grad_params(std::span<const double> x,                           \
                          std::span<const double> dy, std::size_t rows,        \
                          std::size_t in, std::size_t out,                     \
                          std::span<double> dw, std::span<double> db);         \
  /* y[i] = sum_{j != i} p[i,j] s[j] */                                        \
  void masked_matvec(std::span<const double> p, std::size_t n,                 \
                     std::span<const double> s, std::span<double> y);          \
  void masked_matvec_grad(std::span<const double> p, std::size_t n,            \
                          std::span<const double> s,                           \
                          std::span<const double> dy, std::span<double> dp,    \
                          std::span<double> ds);                               \
  /* y[i] = sum_{j,k distinct from i and each other} t[i,j,k] s1[j] s2[k] */   \
  void masked_bilinear(std::span<const double> t, std::size_t n,               \
                       std::span<const double> s1, std::span<const double> s2, \
                       std::span<double> y);                                   \
  void masked_bilinear_grad(std::span<const double> t, std::size_t n,          \
                            std::span<const double> s1,                        \
                            std::span<const double> s2,                        \
                            std::span<const double> dy, std::span<double> dt,  \
                            std::span<double> ds1, std::span<double> ds2);     \
  /* t[i,j,k] = max(a[i,j] + b[i,k], b[i,j] + a[i,k]); branch 0 wins ties */   \
  void compose_max(std::span<const double> a, std::span<const double> b,       \
                   std::size_t n, std::span<double> t,                         \
                   std::span<std::uint8_t> branch);                            \
  /* Pair-encoder inputs for every ordered pair i != j in lexicographic order: \
     [attr_i, attr_j, (c_i - c_j) * scale, |c_i - c_j| * scale] */             \
  void pair_inputs(std::span<const double> attrs, std::size_t n,               \
                   std::size_t attr_dim, std::span<const double> centers,      \
                   double geometry_scale, std::span<double> rows);             \
  /* Triple-encoder inputs for every ordered distinct (i,j,k):                 \
     [attr_i, attr_j, attr_k, c_i - c_j, c_i - c_k, |c_i-c_j|, |c_i-c_k|] */   \
  void triple_inputs(std::span<const double> attrs, std::size_t n,             \
                     std::size_t attr_dim, std::span<const double> centers,    \
                     double geometry_scale, std::span<double> rows);

namespace serial {
LARC_KERNEL_SET
}  // namespace serial

namespace parallel {
LARC_KERNEL_SET
}  // namespace parallel

// Dispatching versions that follow the process-wide policy.
LARC_KERNEL_SET

#undef LARC_KERNEL_SET

}  // namespace larc::kernels
