#include "larc/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace larc::kernels {
namespace {

// Below this many inner-loop operations a parallel region costs more than it saves.
constexpr std::int64_t kMinParallelWork = 4096;

std::atomic<Policy> g_policy{Policy::kParallel};

}  // namespace

void set_policy(Policy p) { g_policy.store(p); }
Policy policy() { return g_policy.load(); }

int max_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_max_workers(int workers) {
#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
#else
  (void)workers;
#endif
}

namespace parallel {

void affine(std::span<const double> x, std::size_t rows, std::size_t in,
            std::span<const double> w, std::span<const double> b,
            std::size_t out, std::span<double> y) {
  const auto n_rows = static_cast<std::int64_t>(rows);
  const bool big = n_rows * static_cast<std::int64_t>(in * out) >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t r = 0; r < n_rows; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      for (std::size_t k = 0; k < in; ++k) acc += x[r * in + k] * w[k * out + o];
      y[r * out + o] = acc;
    }
  }
}

void affine_grad_input(std::span<const double> dy, std::size_t rows,
                       std::size_t out, std::span<const double> w,
                       std::size_t in, std::span<double> dx) {
  const auto n_rows = static_cast<std::int64_t>(rows);
  const bool big = n_rows * static_cast<std::int64_t>(in * out) >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t r = 0; r < n_rows; ++r) {
    for (std::size_t k = 0; k < in; ++k) {
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += dy[r * out + o] * w[k * out + o];
      dx[r * in + k] += acc;
    }
  }
}

void affine_grad_params(std::span<const double> x, std::span<const double> dy,
                        std::size_t rows, std::size_t in, std::size_t out,
                        std::span<double> dw, std::span<double> db) {
  const auto n_in = static_cast<std::int64_t>(in);
  const bool big = static_cast<std::int64_t>(rows * in * out) >= kMinParallelWork;
#pragma omp parallel if (big)
  {
#pragma omp for schedule(static)
    for (std::int64_t k = 0; k < n_in; ++k) {
      for (std::size_t o = 0; o < out; ++o) {
        double acc = dw[k * out + o];
        for (std::size_t r = 0; r < rows; ++r) acc += x[r * in + k] * dy[r * out + o];
        dw[k * out + o] = acc;
      }
    }
#pragma omp for schedule(static)
    for (std::int64_t o = 0; o < static_cast<std::int64_t>(out); ++o) {
      double acc = db[o];
      for (std::size_t r = 0; r < rows; ++r) acc += dy[r * out + o];
      db[o] = acc;
    }
  }
}

void masked_matvec(std::span<const double> p, std::size_t n,
                   std::span<const double> s, std::span<double> y) {
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (nn * nn >= kMinParallelWork)
  for (std::int64_t i = 0; i < nn; ++i) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < nn; ++j) {
      if (j == i) continue;
      acc += p[i * n + j] * s[j];
    }
    y[i] = acc;
  }
}

void masked_matvec_grad(std::span<const double> p, std::size_t n,
                        std::span<const double> s, std::span<const double> dy,
                        std::span<double> dp, std::span<double> ds) {
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel if (nn * nn >= kMinParallelWork)
  {
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < nn; ++i) {
      for (std::int64_t j = 0; j < nn; ++j) {
        if (j == i) continue;
        dp[i * n + j] += dy[i] * s[j];
      }
    }
#pragma omp for schedule(static)
    for (std::int64_t j = 0; j < nn; ++j) {
      double acc = ds[j];
      for (std::int64_t i = 0; i < nn; ++i) {
        if (j == i) continue;
        acc += dy[i] * p[i * n + j];
      }
      ds[j] = acc;
    }
  }
}

void masked_bilinear(std::span<const double> t, std::size_t n,
                     std::span<const double> s1, std::span<const double> s2,
                     std::span<double> y) {
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (nn * nn * nn >= kMinParallelWork)
  for (std::int64_t i = 0; i < nn; ++i) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < nn; ++j) {
      if (j == i) continue;
      for (std::int64_t k = 0; k < nn; ++k) {
        if (k == i || k == j) continue;
        acc += t[(i * n + j) * n + k] * s1[j] * s2[k];
      }
    }
    y[i] = acc;
  }
}

void masked_bilinear_grad(std::span<const double> t, std::size_t n,
                          std::span<const double> s1,
                          std::span<const double> s2,
                          std::span<const double> dy, std::span<double> dt,
                          std::span<double> ds1, std::span<double> ds2) {
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel if (nn * nn * nn >= kMinParallelWork)
  {
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < nn; ++i) {
      for (std::int64_t j = 0; j < nn; ++j) {
        if (j == i) continue;
        for (std::int64_t k = 0; k < nn; ++k) {
          if (k == i || k == j) continue;
          dt[(i * n + j) * n + k] += dy[i] * s1[j] * s2[k];
        }
      }
    }
#pragma omp for schedule(static)
    for (std::int64_t j = 0; j < nn; ++j) {
      double acc = ds1[j];
      for (std::int64_t i = 0; i < nn; ++i) {
        if (j == i) continue;
        for (std::int64_t k = 0; k < nn; ++k) {
          if (k == i || k == j) continue;
          acc += dy[i] * t[(i * n + j) * n + k] * s2[k];
        }
      }
      ds1[j] = acc;
    }
#pragma omp for schedule(static)
    for (std::int64_t k = 0; k < nn; ++k) {
      double acc = ds2[k];
      for (std::int64_t i = 0; i < nn; ++i) {
        if (k == i) continue;
        for (std::int64_t j = 0; j < nn; ++j) {
          if (j == i || j == k) continue;
          acc += dy[i] * t[(i * n + j) * n + k] * s1[j];
        }
      }
      ds2[k] = acc;
    }
  }
}

void compose_max(std::span<const double> a, std::span<const double> b,
                 std::size_t n, std::span<double> t,
                 std::span<std::uint8_t> branch) {
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (nn * nn * nn >= kMinParallelWork)
  for (std::int64_t i = 0; i < nn; ++i) {
    for (std::int64_t j = 0; j < nn; ++j) {
      for (std::int64_t k = 0; k < nn; ++k) {
        const std::size_t idx = (i * n + j) * n + k;
        if (i == j || i == k || j == k) {
          t[idx] = std::numeric_limits<double>::quiet_NaN();
          branch[idx] = 0;
          continue;
        }
        const double first = a[i * n + j] + b[i * n + k];
        const double second = b[i * n + j] + a[i * n + k];
        const bool take_second = second > first;
        t[idx] = take_second ? second : first;
        branch[idx] = take_second ? 1 : 0;
      }
    }
  }
}

void pair_inputs(std::span<const double> attrs, std::size_t n,
                 std::size_t attr_dim, std::span<const double> centers,
                 double geometry_scale, std::span<double> rows) {
  const std::size_t width = 2 * attr_dim + kPairGeometry;
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (nn * nn * static_cast<std::int64_t>(width) >= kMinParallelWork)
  for (std::int64_t i = 0; i < nn; ++i) {
    std::size_t row = static_cast<std::size_t>(i) * (n - 1);
    for (std::int64_t j = 0; j < nn; ++j) {
      if (i == j) continue;
      double* out = rows.data() + row * width;
      std::copy_n(attrs.data() + i * attr_dim, attr_dim, out);
      std::copy_n(attrs.data() + j * attr_dim, attr_dim, out + attr_dim);
      double sq = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        const double delta = centers[i * 3 + a] - centers[j * 3 + a];
        out[2 * attr_dim + a] = delta * geometry_scale;
        sq += delta * delta;
      }
      out[2 * attr_dim + 3] = std::sqrt(sq) * geometry_scale;
      ++row;
    }
  }
}

void triple_inputs(std::span<const double> attrs, std::size_t n,
                   std::size_t attr_dim, std::span<const double> centers,
                   double geometry_scale, std::span<double> rows) {
  const std::size_t width = 3 * attr_dim + kTripleGeometry;
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (nn * nn * nn * static_cast<std::int64_t>(width) >= kMinParallelWork)
  for (std::int64_t i = 0; i < nn; ++i) {
    std::size_t row = n < 3 ? 0 : static_cast<std::size_t>(i) * (n - 1) * (n - 2);
    for (std::int64_t j = 0; j < nn; ++j) {
      if (j == i) continue;
      for (std::int64_t k = 0; k < nn; ++k) {
        if (k == i || k == j) continue;
        double* out = rows.data() + row * width;
        std::copy_n(attrs.data() + i * attr_dim, attr_dim, out);
        std::copy_n(attrs.data() + j * attr_dim, attr_dim, out + attr_dim);
        std::copy_n(attrs.data() + k * attr_dim, attr_dim, out + 2 * attr_dim);
        double sq_j = 0.0;
        double sq_k = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
          const double dj = centers[i * 3 + a] - centers[j * 3 + a];
          const double dk = centers[i * 3 + a] - centers[k * 3 + a];
          out[3 * attr_dim + a] = dj * geometry_scale;
          out[3 * attr_dim + 3 + a] = dk * geometry_scale;
          sq_j += dj * dj;
          sq_k += dk * dk;
        }
        out[3 * attr_dim + 6] = std::sqrt(sq_j) * geometry_scale;
        out[3 * attr_dim + 7] = std::sqrt(sq_k) * geometry_scale;
        ++row;
      }
    }
  }
}

}  // namespace parallel

// Dispatch.

#define LARC_DISPATCH(name, ...)                              \
  if (policy() == Policy::kParallel) {                        \
    parallel::name(__VA_ARGS__);                              \
  } else {                                                    \
    serial::name(__VA_ARGS__);                                \
  }

void affine(std::span<const double> x, std::size_t rows, std::size_t in,
            std::span<const double> w, std::span<const double> b,
            std::size_t out, std::span<double> y) {
  LARC_DISPATCH(affine, x, rows, in, w, b, out, y)
}
void affine_grad_input(std::span<const double> dy, std::size_t rows,
                       std::size_t out, std::span<const double> w,
                       std::size_t in, std::span<double> dx) {
  LARC_DISPATCH(affine_grad_input, dy, rows, out, w, in, dx)
}
void affine_grad_params(std::span<const double> x, std::span<const double> dy,
                        std::size_t rows, std::size_t in, std::size_t out,
                        std::span<double> dw, std::span<double> db) {
  LARC_DISPATCH(affine_grad_params, x, dy, rows, in, out, dw, db)
}
void masked_matvec(std::span<const double> p, std::size_t n,
                   std::span<const double> s, std::span<double> y) {
  LARC_DISPATCH(masked_matvec, p, n, s, y)
}
void masked_matvec_grad(std::span<const double> p, std::size_t n,
                        std::span<const double> s, std::span<const double> dy,
                        std::span<double> dp, std::span<double> ds) {
  LARC_DISPATCH(masked_matvec_grad, p, n, s, dy, dp, ds)
}
void masked_bilinear(std::span<const double> t, std::size_t n,
                     std::span<const double> s1, std::span<const double> s2,
                     std::span<double> y) {
  LARC_DISPATCH(masked_bilinear, t, n, s1, s2, y)
}
void masked_bilinear_grad(std::span<const double> t, std::size_t n,
                          std::span<const double> s1,
                          std::span<const double> s2,
                          std::span<const double> dy, std::span<double> dt,
                          std::span<double> ds1, std::span<double> ds2) {
  LARC_DISPATCH(masked_bilinear_grad, t, n, s1, s2, dy, dt, ds1, ds2)
}
void compose_max(std::span<const double> a, std::span<const double> b,
                 std::size_t n, std::span<double> t,
                 std::span<std::uint8_t> branch) {
  LARC_DISPATCH(compose_max, a, b, n, t, branch)
}
void pair_inputs(std::span<const double> attrs, std::size_t n,
                 std::size_t attr_dim, std::span<const double> centers,
                 double geometry_scale, std::span<double> rows) {
  LARC_DISPATCH(pair_inputs, attrs, n, attr_dim, centers, geometry_scale, rows)
}
void triple_inputs(std::span<const double> attrs, std::size_t n,
                   std::size_t attr_dim, std::span<const double> centers,
                   double geometry_scale, std::span<double> rows) {
  LARC_DISPATCH(triple_inputs, attrs, n, attr_dim, centers, geometry_scale, rows)
}

#undef LARC_DISPATCH

}  // namespace larc::kernels
