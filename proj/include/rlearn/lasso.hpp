#pragma once

// Cyclic coordinate-descent lasso with warm-started regularization paths and
// K-fold cross-validation, plus the L1-penalized logistic variant (IRLS
// around the same inner loop). Weighted objective:
//   (1/(2*sum w)) sum_i w_i (y_i - b0 - f_i.beta)^2 + lambda * sum_j pf_j |beta_j|
// with an unpenalized intercept. The logistic objective is the average
// negative log-likelihood plus the same penalty.

#include "rlearn/data.hpp"
#include "rlearn/rng.hpp"

namespace rlearn {

struct LinearPath {
  VectorXd lambda_grid;    // strictly decreasing; grid[0] zeroes all penalized coefs
  MatrixXd coefficients;   // grid length x feature count, original scale
  VectorXd intercepts;
  VectorXd cv_mean;        // per-lambda CV loss (squared error resp. deviance)
  VectorXd cv_se;
  double lambda_min = 0.0;
  double lambda_1se = 0.0;
  Index index_min = 0;     // argmin of cv_mean (largest lambda on ties)
  Index index_1se = 0;     // largest lambda within one SE of the minimum
  bool degenerate = false; // zero-variance target: intercept-only fit
  bool logistic = false;

  // Linear predictor at one grid point; logistic paths return probabilities.
  VectorXd predict(const Eigen::Ref<const MatrixXd>& features, Index grid_index) const;
  VectorXd predict_min(const Eigen::Ref<const MatrixXd>& features) const {
    return predict(features, index_min);
  }
  VectorXd predict_1se(const Eigen::Ref<const MatrixXd>& features) const {
    return predict(features, index_1se);
  }
};

struct LassoOptions {
  int n_lambda = 100;
  double lambda_min_ratio = 1e-4;
  int cv_folds = 10;          // < 2 disables CV (index_min = smallest lambda)
  bool standardize = true;    // internal weighted standardization of columns
  double tol = 1e-7;          // stop: max curvature-scaled squared coef change
  int max_sweeps = 10000;     // safety cap per lambda
  VectorXd penalty_factor;    // empty = all ones; 0 marks unpenalized columns
  VectorXd lambda_grid_override;          // diagnostics/tests: fixed grid
  std::vector<double>* objective_trace = nullptr;  // per-sweep penalized objective
};

LinearPath lasso_path_fit(const Eigen::Ref<const MatrixXd>& features,
                          const VectorXd& target, const VectorXd& weights,
                          const LassoOptions& options, Rng rng);

LinearPath logistic_lasso_path_fit(const Eigen::Ref<const MatrixXd>& features,
                                   const VectorXd& target,
                                   const LassoOptions& options, Rng rng);

// Fold labels 0..k-1 with sizes differing by at most one; deterministic in rng.
std::vector<int> balanced_folds(Index n, int k, Rng rng);

}  // namespace rlearn
