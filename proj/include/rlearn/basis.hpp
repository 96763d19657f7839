#pragma once

// Natural cubic spline expansion with pairwise interactions, the fixed design
// used by every penalized linear fit here. Per feature: df B-spline-based
// natural-spline columns (boundary knots at the min/max, df-1 interior knots
// at quantiles, linear extrapolation beyond the boundaries). Interactions are
// elementwise products of marginal columns for every feature pair. Columns
// are standardized to the training data's weighted mean/sd; zero-variance
// columns pass through unscaled.

#include <vector>

#include "rlearn/data.hpp"

namespace rlearn {

struct BasisSpec {
  int df = 7;
  bool include_interactions = true;
};

class SplineBasis {
 public:
  // Learns knots and standardization from x (rows: observations).
  SplineBasis(const Eigen::Ref<const MatrixXd>& x, const BasisSpec& spec);

  // Expands new points on the learned knots and applies the learned
  // standardization. Column layout: per-feature marginal blocks of df
  // columns, then df*df interaction columns per feature pair (a < b).
  MatrixXd transform(const Eigen::Ref<const MatrixXd>& x) const;

  Index input_features() const { return d_; }
  Index columns() const { return cols_; }
  const VectorXd& column_means() const { return means_; }
  const VectorXd& column_scales() const { return scales_; }

 private:
  struct FeatureBasis {
    bool raw = false;        // too few distinct values: df copies of the value
    VectorXd knots;          // boundary-padded knot vector (raw: empty)
    MatrixXd nullspace;      // (#bsplines - 1) x df natural-spline projection
    double lo = 0.0, hi = 0.0;
    Eigen::RowVectorXd val_lo, slope_lo, val_hi, slope_hi;  // linear extension
  };

  Eigen::RowVectorXd expand_feature(Index feature, double value) const;
  MatrixXd transform_raw(const Eigen::Ref<const MatrixXd>& x) const;

  Index d_ = 0;
  int df_ = 0;
  bool interactions_ = true;
  Index cols_ = 0;
  std::vector<FeatureBasis> features_;
  VectorXd means_, scales_;
};

// One-shot expansion: learn the basis on x and return transform(x).
MatrixXd expand_basis(const Eigen::Ref<const MatrixXd>& x, const BasisSpec& spec);

namespace detail {
// Linear-interpolation quantile of a sorted vector, q in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double q);
}  // namespace detail

}  // namespace rlearn
