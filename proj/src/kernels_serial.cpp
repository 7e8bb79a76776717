#include "larc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace larc::kernels::serial {

void affine(std::span<const double> x, std::size_t rows, std::size_t in,
            std::span<const double> w, std::span<const double> b,
            std::size_t out, std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r) {
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
  for (std::size_t r = 0; r < rows; ++r) {
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
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < in; ++k) {
      for (std::size_t o = 0; o < out; ++o) {
        dw[k * out + o] += x[r * in + k] * dy[r * out + o];
      }
    }
    for (std::size_t o = 0; o < out; ++o) db[o] += dy[r * out + o];
  }
}

void masked_matvec(std::span<const double> p, std::size_t n,
                   std::span<const double> s, std::span<double> y) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      acc += p[i * n + j] * s[j];
    }
    y[i] = acc;
  }
}

void masked_matvec_grad(std::span<const double> p, std::size_t n,
                        std::span<const double> s, std::span<const double> dy,
                        std::span<double> dp, std::span<double> ds) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dp[i * n + j] += dy[i] * s[j];
      ds[j] += dy[i] * p[i * n + j];
    }
  }
}

void masked_bilinear(std::span<const double> t, std::size_t n,
                     std::span<const double> s1, std::span<const double> s2,
                     std::span<double> y) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
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
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double v = t[(i * n + j) * n + k];
        dt[(i * n + j) * n + k] += dy[i] * s1[j] * s2[k];
        ds1[j] += dy[i] * v * s2[k];
        ds2[k] += dy[i] * v * s1[j];
      }
    }
  }
}

void compose_max(std::span<const double> a, std::span<const double> b,
                 std::size_t n, std::span<double> t,
                 std::span<std::uint8_t> branch) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
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
  std::size_t row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
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
  std::size_t row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
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

}  // namespace larc::kernels::serial
