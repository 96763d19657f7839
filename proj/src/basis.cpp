#include "rlearn/basis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace rlearn {

namespace detail {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty vector");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

namespace {

// All order-1..4 B-spline basis values at x for knot vector t, plus first and
// second derivatives of the order-4 functions. Right-closed at the last knot.
struct BsplineRow {
  VectorXd b4;  // len(t) - 4 values
  VectorXd d1;
  VectorXd d2;
};

BsplineRow bspline_row(const VectorXd& t, double x) {
  const Index len = t.size();
  const Index m = len - 4;  // number of cubic B-splines
  // Locate the knot interval, treating x == t[last] as the final interval.
  Index mu = -1;
  for (Index i = 0; i + 1 < len; ++i)
    if (t[i] <= x && x < t[i + 1]) {
      mu = i;
      break;
    }
  if (mu < 0) {
    for (Index i = len - 2; i >= 0; --i)
      if (t[i] < t[i + 1]) {
        mu = i;
        break;
      }
  }
  const auto ratio = [](double num, double den) {
    return den > 0.0 ? num / den : 0.0;
  };
  VectorXd ord = VectorXd::Zero(len - 1);
  ord[mu] = 1.0;
  VectorXd ord2, ord3;
  for (int k = 2; k <= 4; ++k) {
    VectorXd next = VectorXd::Zero(len - k);
    for (Index i = 0; i + k < len; ++i) {
      const double a = ratio(x - t[i], t[i + k - 1] - t[i]) * ord[i];
      const double b = ratio(t[i + k] - x, t[i + k] - t[i + 1]) * ord[i + 1];
      next[i] = a + b;
    }
    if (k == 2) ord2 = next;
    if (k == 3) ord3 = next;
    ord = std::move(next);
  }
  BsplineRow row;
  row.b4 = ord;
  row.d1 = VectorXd::Zero(m);
  row.d2 = VectorXd::Zero(m);
  VectorXd d3 = VectorXd::Zero(len - 3);  // first derivatives of order-3 splines
  for (Index i = 0; i + 3 < len; ++i)
    d3[i] = 2.0 * (ratio(ord2[i], t[i + 2] - t[i]) -
                   ratio(ord2[i + 1], t[i + 3] - t[i + 1]));
  for (Index i = 0; i < m; ++i) {
    row.d1[i] = 3.0 * (ratio(ord3[i], t[i + 3] - t[i]) -
                       ratio(ord3[i + 1], t[i + 4] - t[i + 1]));
    row.d2[i] = 3.0 * (ratio(d3[i], t[i + 3] - t[i]) -
                       ratio(d3[i + 1], t[i + 4] - t[i + 1]));
  }
  return row;
}

}  // namespace

SplineBasis::SplineBasis(const Eigen::Ref<const MatrixXd>& x, const BasisSpec& spec) {
  if (x.rows() < 1 || x.cols() < 1)
    throw std::invalid_argument("SplineBasis: empty input");
  if (spec.df < 3) throw std::invalid_argument("SplineBasis: df must be >= 3");
  if (!x.allFinite()) throw std::invalid_argument("SplineBasis: non-finite input");
  d_ = x.cols();
  df_ = spec.df;
  interactions_ = spec.include_interactions;
  features_.resize(static_cast<size_t>(d_));

  const int n_interior = df_ - 1;
  for (Index j = 0; j < d_; ++j) {
    FeatureBasis& fb = features_[static_cast<size_t>(j)];
    std::vector<double> vals(x.col(j).data(), x.col(j).data() + x.rows());
    std::sort(vals.begin(), vals.end());
    const std::set<double> distinct(vals.begin(), vals.end());
    fb.lo = vals.front();
    fb.hi = vals.back();
    std::vector<double> interior(static_cast<size_t>(n_interior));
    for (int q = 0; q < n_interior; ++q)
      interior[static_cast<size_t>(q)] = detail::quantile_sorted(
          vals, static_cast<double>(q + 1) / static_cast<double>(df_));
    bool monotone = fb.lo < interior.front() && interior.back() < fb.hi;
    for (int q = 0; q + 1 < n_interior && monotone; ++q)
      monotone = interior[static_cast<size_t>(q)] < interior[static_cast<size_t>(q + 1)];
    if (static_cast<int>(distinct.size()) < df_ || !monotone) {
      fb.raw = true;  // degenerate spread: df copies of the raw value
      continue;
    }
    const Index m = static_cast<Index>(n_interior) + 4;  // cubic B-spline count
    fb.knots.resize(m + 4);
    for (int k = 0; k < 4; ++k) fb.knots[k] = fb.lo;
    for (int q = 0; q < n_interior; ++q) fb.knots[4 + q] = interior[static_cast<size_t>(q)];
    for (int k = 0; k < 4; ++k) fb.knots[m + k] = fb.hi;

    // Natural-spline constraint: zero second derivative at both boundaries,
    // after dropping the first B-spline column (no intercept column).
    const BsplineRow at_lo = bspline_row(fb.knots, fb.lo);
    const BsplineRow at_hi = bspline_row(fb.knots, fb.hi);
    MatrixXd constraints(2, m - 1);
    constraints.row(0) = at_lo.d2.tail(m - 1).transpose();
    constraints.row(1) = at_hi.d2.tail(m - 1).transpose();
    Eigen::HouseholderQR<MatrixXd> qr(constraints.transpose());
    const MatrixXd q_full = qr.householderQ();
    fb.nullspace = q_full.rightCols(m - 3);  // (m-1) x df

    fb.val_lo = at_lo.b4.tail(m - 1).transpose() * fb.nullspace;
    fb.slope_lo = at_lo.d1.tail(m - 1).transpose() * fb.nullspace;
    fb.val_hi = at_hi.b4.tail(m - 1).transpose() * fb.nullspace;
    fb.slope_hi = at_hi.d1.tail(m - 1).transpose() * fb.nullspace;
  }

  const Index marginal = d_ * df_;
  cols_ = interactions_
              ? marginal + static_cast<Index>(df_) * df_ * (d_ * (d_ - 1) / 2)
              : marginal;

  // Standardization statistics from the training expansion.
  const MatrixXd raw = transform_raw(x);
  means_.resize(cols_);
  scales_.resize(cols_);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (Index c = 0; c < cols_; ++c) {
    const double mean = raw.col(c).sum() * inv_n;
    const double var =
        raw.col(c).cwiseProduct(raw.col(c)).sum() * inv_n - mean * mean;
    const double sd = std::sqrt(std::max(var, 0.0));
    if (sd > 1e-12 * (1.0 + std::abs(mean))) {
      means_[c] = mean;
      scales_[c] = sd;
    } else {
      means_[c] = 0.0;  // constant column: pass through untouched
      scales_[c] = 1.0;
    }
  }
}

Eigen::RowVectorXd SplineBasis::expand_feature(Index feature, double value) const {
  const FeatureBasis& fb = features_[static_cast<size_t>(feature)];
  if (fb.raw) return Eigen::RowVectorXd::Constant(df_, value);
  if (value < fb.lo) return fb.val_lo + (value - fb.lo) * fb.slope_lo;
  if (value > fb.hi) return fb.val_hi + (value - fb.hi) * fb.slope_hi;
  const BsplineRow row = bspline_row(fb.knots, value);
  const Index m = row.b4.size();
  return row.b4.tail(m - 1).transpose() * fb.nullspace;
}

MatrixXd SplineBasis::transform_raw(const Eigen::Ref<const MatrixXd>& x) const {
  if (x.cols() != d_)
    throw std::invalid_argument("SplineBasis: feature-count mismatch");
  if (!x.allFinite()) throw std::invalid_argument("SplineBasis: non-finite input");
  const Index n = x.rows();
  MatrixXd out(n, cols_);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d_; ++j)
      out.block(i, j * df_, 1, df_) = expand_feature(j, x(i, j));
  }
  if (interactions_) {
    Index c = d_ * df_;
    for (Index a = 0; a < d_; ++a) {
      for (Index b = a + 1; b < d_; ++b) {
        for (int u = 0; u < df_; ++u) {
          for (int v = 0; v < df_; ++v) {
            out.col(c++) =
                out.col(a * df_ + u).cwiseProduct(out.col(b * df_ + v));
          }
        }
      }
    }
  }
  return out;
}

MatrixXd SplineBasis::transform(const Eigen::Ref<const MatrixXd>& x) const {
  MatrixXd out = transform_raw(x);
  for (Index c = 0; c < cols_; ++c) {
    if (means_[c] != 0.0) out.col(c).array() -= means_[c];
    if (scales_[c] != 1.0) out.col(c) /= scales_[c];
  }
  return out;
}

MatrixXd expand_basis(const Eigen::Ref<const MatrixXd>& x, const BasisSpec& spec) {
  return SplineBasis(x, spec).transform(x);
}

}  // namespace rlearn
