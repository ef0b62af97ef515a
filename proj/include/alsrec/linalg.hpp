#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "alsrec/dataset.hpp"
#include "alsrec/error.hpp"
#include "alsrec/parallel.hpp"

namespace alsrec {

// Row-major dense matrix of 64-bit floats.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Symmetric positive (semi-)definite system A + shift*Id. The shift is the
// regularization added to every normal-equation diagonal.
class SpdSystem {
 public:
  SpdSystem(DenseMatrix a, double shift) : a_(std::move(a)), shift_(shift) {
    if (a_.rows() != a_.cols()) throw ShapeError("SpdSystem matrix must be square");
    if (!(shift_ >= 0.0)) throw ConfigError("SpdSystem shift must be non-negative");
    double max_abs = 0.0;
    for (double v : a_.values()) {
      if (!std::isfinite(v)) throw NumericError("SpdSystem matrix has a non-finite entry");
      max_abs = std::max(max_abs, std::fabs(v));
    }
    const double tol = 1e-12 * std::max(1.0, max_abs);
    for (std::size_t i = 0; i < a_.rows(); ++i)
      for (std::size_t j = i + 1; j < a_.cols(); ++j)
        if (std::fabs(a_(i, j) - a_(j, i)) > tol)
          throw NumericError("SpdSystem matrix is not symmetric");
  }

  std::size_t dim() const { return a_.rows(); }
  double shift() const { return shift_; }
  const DenseMatrix& matrix() const { return a_; }

  // out = (A + shift*Id) x
  void apply(const double* x, double* out) const {
    const std::size_t n = dim();
    for (std::size_t i = 0; i < n; ++i) {
      const double* arow = a_.data() + i * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += arow[j] * x[j];
      out[i] = acc + shift_ * x[i];
    }
  }

  // Quadratic 0.5 x'(A+shift*Id)x - b'x minimized by the CG iterates.
  double quadratic(std::span<const double> x, std::span<const double> b) const {
    std::vector<double> ax(dim());
    apply(x.data(), ax.data());
    double q = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) q += 0.5 * x[i] * ax[i] - b[i] * x[i];
    return q;
  }

 private:
  DenseMatrix a_;
  double shift_ = 0.0;
};

namespace detail {

inline double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// Tile edge of the Gram computation. Each upper-triangle tile of F'F is
// produced by exactly one task that scans the rows of F in index order, so
// every output entry has one fixed summation order no matter how many
// threads run.
inline constexpr std::size_t kGramTile = 32;

}  // namespace detail

// F'F, exactly symmetric by construction (upper triangle computed, mirrored).
inline DenseMatrix gram(const DenseMatrix& f, unsigned threads = 1) {
  const std::size_t n = f.rows();
  const std::size_t k = f.cols();
  if (k == 0) throw ShapeError("gram: matrix has no columns");
  DenseMatrix g(k, k);

  const std::size_t tiles = (k + detail::kGramTile - 1) / detail::kGramTile;
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t bi = 0; bi < tiles; ++bi)
    for (std::size_t bj = bi; bj < tiles; ++bj) tasks.emplace_back(bi, bj);

  parallel_for(tasks.size(), threads, [&](std::size_t t0, std::size_t t1) {
    double acc[detail::kGramTile * detail::kGramTile];
    for (std::size_t t = t0; t < t1; ++t) {
      const std::size_t i0 = tasks[t].first * detail::kGramTile;
      const std::size_t j0 = tasks[t].second * detail::kGramTile;
      const std::size_t iw = std::min(detail::kGramTile, k - i0);
      const std::size_t jw = std::min(detail::kGramTile, k - j0);
      for (std::size_t x = 0; x < iw * jw; ++x) acc[x] = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double* row = f.data() + r * k;
        const double* a = row + i0;
        const double* b = row + j0;
        for (std::size_t ii = 0; ii < iw; ++ii) {
          const double av = a[ii];
          double* arow = acc + ii * jw;
          for (std::size_t jj = 0; jj < jw; ++jj) arow[jj] += av * b[jj];
        }
      }
      for (std::size_t ii = 0; ii < iw; ++ii)
        for (std::size_t jj = 0; jj < jw; ++jj) g(i0 + ii, j0 + jj) = acc[ii * jw + jj];
    }
  });

  // Mirror the strict upper triangle.
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) g(j, i) = g(i, j);

  for (std::size_t i = 0; i < k; ++i)
    if (!std::isfinite(g(i, i)))
      throw NumericError("gram: non-finite accumulation in column " + std::to_string(i));
  return g;
}

namespace detail {

struct CgScratch {
  std::vector<double> r, p, ap;
  void resize(std::size_t n) {
    r.resize(n);
    p.resize(n);
    ap.resize(n);
  }
};

// Standard CG on (A + shift*Id) x = b, warm-started from the value already in
// x. At most max_steps steps; early exit when the residual falls below
// 1e-12 * max(1, ||b||). Each step lowers the quadratic, so a truncated run
// is still a descent update.
inline void cg_solve_inplace(const SpdSystem& sys, std::span<const double> b,
                             std::span<double> x, std::size_t max_steps, CgScratch& s) {
  const std::size_t n = sys.dim();
  s.resize(n);
  sys.apply(x.data(), s.ap.data());
  for (std::size_t i = 0; i < n; ++i) s.r[i] = b[i] - s.ap[i];
  double rs = dot(s.r.data(), s.r.data(), n);
  if (!std::isfinite(rs)) throw NumericError("cg_solve: non-finite residual at step 0");
  const double b_norm = std::sqrt(dot(b.data(), b.data(), n));
  const double stop = 1e-12 * std::max(1.0, b_norm);
  if (!(std::sqrt(rs) > stop)) return;
  s.p = s.r;
  for (std::size_t step = 1; step <= max_steps; ++step) {
    sys.apply(s.p.data(), s.ap.data());
    const double p_ap = dot(s.p.data(), s.ap.data(), n);
    if (!std::isfinite(p_ap))
      throw NumericError("cg_solve: non-finite curvature at step " + std::to_string(step));
    // Semi-definite breakdown: no curvature left along p.
    if (p_ap <= 0.0) return;
    const double alpha = rs / p_ap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * s.p[i];
      s.r[i] -= alpha * s.ap[i];
    }
    const double rs_next = dot(s.r.data(), s.r.data(), n);
    if (!std::isfinite(rs_next))
      throw NumericError("cg_solve: non-finite residual at step " + std::to_string(step));
    if (!(std::sqrt(rs_next) > stop)) return;
    const double beta = rs_next / rs;
    for (std::size_t i = 0; i < n; ++i) s.p[i] = s.r[i] + beta * s.p[i];
    rs = rs_next;
  }
}

}  // namespace detail

// CG iterate after at most max_steps steps, warm-started at x0.
inline std::vector<double> cg_solve(const SpdSystem& sys, std::span<const double> b,
                                    std::span<const double> x0, std::size_t max_steps) {
  if (b.size() != sys.dim() || x0.size() != sys.dim())
    throw ShapeError("cg_solve: vector length does not match system dimension");
  if (max_steps < 1) throw ConfigError("cg_solve: max_steps must be >= 1");
  std::vector<double> x(x0.begin(), x0.end());
  detail::CgScratch scratch;
  detail::cg_solve_inplace(sys, b, x, max_steps, scratch);
  return x;
}

// Squared-error loss over every (company, investor) cell plus L2 regularization:
//
//   L = sum_{c,i} (m_ci - x_c'y_i)^2 + lambda (|X|_F^2 + |Y|_F^2)
//
// evaluated through the identity sum_{c,i} (x_c'y_i)^2 = trace((X'X)(Y'Y)),
// which needs only the two Gram matrices plus a correction over stored pairs:
// cost O((C+I) f^2 + nnz f) instead of O(C*I).
inline double loss_from_grams(const InteractionDataset& d, const DenseMatrix& x,
                              const DenseMatrix& y, const DenseMatrix& gx,
                              const DenseMatrix& gy, double lambda, unsigned threads = 1) {
  const std::size_t f = x.cols();
  if (y.cols() != f) throw ShapeError("loss: X and Y have different factor counts");
  if (x.rows() != d.company_count() || y.rows() != d.investor_count())
    throw ShapeError("loss: factor matrices do not match the dataset");
  if (gx.rows() != f || gx.cols() != f || gy.rows() != f || gy.cols() != f)
    throw ShapeError("loss: Gram matrices do not match the factor count");

  // trace(Gx * Gy) with both symmetric: elementwise product.
  double trace_prod = 0.0;
  for (std::size_t i = 0; i < f * f; ++i) trace_prod += gx.data()[i] * gy.data()[i];

  double norm_x = 0.0, norm_y = 0.0;
  for (std::size_t i = 0; i < f; ++i) {
    norm_x += gx(i, i);
    norm_y += gy(i, i);
  }

  // Observed-pair correction, one deterministic partial per investor summed
  // in index order.
  const Index investors = d.investor_count();
  std::vector<double> partial(investors, 0.0);
  parallel_for(investors, threads, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const double* yrow = y.data() + i * f;
      double acc = 0.0;
      for (Index c : d.companies_of(static_cast<Index>(i)))
        acc += detail::dot(x.data() + static_cast<std::size_t>(c) * f, yrow, f);
      partial[i] = acc;
    }
  });
  double observed_dot = 0.0;
  for (double v : partial) observed_dot += v;

  const double l = trace_prod + (static_cast<double>(d.pair_count()) - 2.0 * observed_dot) +
                   lambda * (norm_x + norm_y);
  if (!std::isfinite(l)) throw NumericError("loss: non-finite value");
  return l;
}

inline double loss(const InteractionDataset& d, const DenseMatrix& x, const DenseMatrix& y,
                   double lambda, unsigned threads = 1) {
  if (!(lambda >= 0.0)) throw ConfigError("loss: lambda must be non-negative");
  return loss_from_grams(d, x, y, gram(x, threads), gram(y, threads), lambda, threads);
}

}  // namespace alsrec
