#pragma once

// Small dense linear-algebra kit backing the barrier solver: 2-D points,
// row-major matrices, Cholesky factorization and a pivoted Gaussian solve.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace wpcn {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }

  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

inline double dist2(const Vec2& a, const Vec2& b) { return (a - b).norm2(); }
inline double dist(const Vec2& a, const Vec2& b) { return std::sqrt(dist2(a, b)); }

// Four-accumulator dot product: fixed association (deterministic) while
// giving the compiler independent chains to vectorize.
inline double dot_unrolled(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  double tail = 0.0;
  for (; k < n; ++k) tail += a[k] * b[k];
  return ((s0 + s1) + (s2 + s3)) + tail;
}

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// In-place lower Cholesky of a symmetric matrix (upper triangle ignored).
// Returns false when a pivot is non-positive or any entry goes non-finite.
inline bool cholesky_inplace(Mat& a) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double* rj = a.row(j);
    const double d = rj[j] - dot_unrolled(rj, rj, j);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double inv = 1.0 / std::sqrt(d);
    rj[j] = std::sqrt(d);
    bool finite = true;
    for (std::size_t i = j + 1; i < n; ++i) {
      double* ri = a.row(i);
      ri[j] = (ri[j] - dot_unrolled(ri, rj, j)) * inv;
      finite &= std::isfinite(ri[j]);
    }
    if (!finite) return false;
  }
  return true;
}

// Modified Cholesky: pivots below `floor` are clamped to `floor` instead of
// failing. Factors any symmetric matrix with finite entries; the result is
// the exact factor of a nearby positive definite matrix. Returns false only
// when a non-finite value appears.
inline bool cholesky_inplace_clamped(Mat& a, double floor_val) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double* rj = a.row(j);
    double d = rj[j] - dot_unrolled(rj, rj, j);
    if (!std::isfinite(d)) return false;
    if (d < floor_val) d = floor_val;
    const double inv = 1.0 / std::sqrt(d);
    rj[j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double* ri = a.row(i);
      ri[j] = (ri[j] - dot_unrolled(ri, rj, j)) * inv;
      if (!std::isfinite(ri[j])) return false;
    }
  }
  return true;
}

// Diagonally pivoted Cholesky (greatest remaining diagonal first), in place
// on the lower triangle. Gives each pivot relative accuracy at its own scale
// even when the diagonal spans many orders of magnitude. Pivots at or below
// `floor_val` (numerical noise) are clamped to it. Fills `perm` such that
// the factor corresponds to A(perm[i], perm[j]). Returns false only when a
// non-finite value appears.
inline bool cholesky_pivoted(Mat& a, std::vector<std::size_t>& perm, double floor_val) {
  const std::size_t n = a.rows();
  perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::vector<double> work(n);  // updated diagonals of the trailing matrix
  for (std::size_t i = 0; i < n; ++i) work[i] = a(i, i);

  auto sym_swap = [&](std::size_t j, std::size_t q) {
    if (j == q) return;
    for (std::size_t k = 0; k < j; ++k) std::swap(a(j, k), a(q, k));
    std::swap(a(j, j), a(q, q));
    for (std::size_t k = j + 1; k < q; ++k) std::swap(a(k, j), a(q, k));
    for (std::size_t k = q + 1; k < n; ++k) std::swap(a(k, j), a(k, q));
    std::swap(work[j], work[q]);
    std::swap(perm[j], perm[q]);
  };

  for (std::size_t j = 0; j < n; ++j) {
    std::size_t q = j;
    for (std::size_t i = j + 1; i < n; ++i)
      if (work[i] > work[q]) q = i;
    sym_swap(j, q);

    double d = work[j];
    if (!std::isfinite(d)) return false;
    if (d < floor_val) d = floor_val;
    const double piv = std::sqrt(d);
    const double inv = 1.0 / piv;
    double* rj = a.row(j);
    rj[j] = piv;
    for (std::size_t i = j + 1; i < n; ++i) {
      double* ri = a.row(i);
      const double lij = (ri[j] - dot_unrolled(ri, rj, j)) * inv;
      if (!std::isfinite(lij)) return false;
      ri[j] = lij;
      work[i] -= lij * lij;
    }
  }
  return true;
}

// Forward substitution L y = c in place.
inline void forward_solve(const Mat& l, std::span<double> c) {
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = l.row(i);
    c[i] = (c[i] - dot_unrolled(ri, c.data(), i)) / ri[i];
  }
}

// Backward substitution L^T x = c in place.
inline void backward_solve(const Mat& l, std::span<double> c) {
  const std::size_t n = l.rows();
  for (std::size_t ii = n; ii-- > 0;) {
    double s = c[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * c[k];
    c[ii] = s / l(ii, ii);
  }
}

// Solves A x = b given the pivoted factor: x = P (L L^T)^{-1} P^T b.
inline void cholesky_solve_pivoted(const Mat& l, const std::vector<std::size_t>& perm,
                                   std::span<double> b) {
  const std::size_t n = l.rows();
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = b[perm[i]];
  forward_solve(l, c);
  backward_solve(l, c);
  for (std::size_t i = 0; i < n; ++i) b[perm[i]] = c[i];
}

// Solves L L^T x = b in place given the factor from cholesky_inplace.
inline void cholesky_solve(const Mat& l, std::span<double> b) {
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = l.row(i);
    b[i] = (b[i] - dot_unrolled(ri, b.data(), i)) / ri[i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * b[k];
    b[ii] = s / l(ii, ii);
  }
}

// Gaussian elimination with partial pivoting; returns false on (numerical)
// singularity. Used for particular solutions of small equality systems.
inline bool solve_linear(Mat a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("solve_linear: shape");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(a(r, col));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (!(best > 0.0) || !std::isfinite(best)) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
      std::swap(b[piv], b[col]);
    }
    const double inv = 1.0 / a(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) * inv;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t c = ii + 1; c < n; ++c) s -= a(ii, c) * x[c];
    x[ii] = s / a(ii, ii);
  }
  return true;
}

}  // namespace wpcn
