#pragma once

// Kernel ridge solver for the weighted residual-on-residual regression:
//   minimize (1/n) sum_i w_i (u_i - sum_j a_j K(x_i, x_j))^2 + ridge * a'Ka
// solved through the normal system (D K + n*ridge*I) a = D u with D=diag(w),
// symmetrized and eigendecomposed so one factorization serves a whole ridge
// grid. Gaussian RBF kernel; bandwidth defaults to the median pairwise
// distance heuristic. Predictions are clamped to [-cap, cap].

#include "rlearn/data.hpp"
#include "rlearn/rng.hpp"

namespace rlearn {

struct KernelModel {
  MatrixXd anchors;       // training inputs
  VectorXd alpha;         // dual coefficients, one per anchor
  double bandwidth = 1.0;
  double ridge = 1.0;
  double cap = 0.0;       // infinity-norm bound on predictions; <= 0 disables

  // Clamped kernel predictions; bumps clamp_activations when the cap binds.
  VectorXd predict(const Eigen::Ref<const MatrixXd>& x) const;
  mutable long long clamp_activations = 0;
};

// exp(-|a_i - b_j|^2 / (2 h^2)) for every row pair.
MatrixXd rbf_kernel(const Eigen::Ref<const MatrixXd>& a,
                    const Eigen::Ref<const MatrixXd>& b, double bandwidth);

// Median pairwise Euclidean distance over a strided subsample of <= 1024 rows.
double median_pairwise_bandwidth(const Eigen::Ref<const MatrixXd>& x);

KernelModel kernel_rlearner_fit(const Eigen::Ref<const MatrixXd>& x,
                                const VectorXd& pseudo_outcome,
                                const VectorXd& weight, double ridge,
                                double bandwidth, double cap);

struct KernelCvResult {
  KernelModel model;      // refit on all data at the selected ridge
  VectorXd ridge_grid;    // descending
  VectorXd cv_loss;       // weighted validation squared error per ridge
  double ridge_selected = 0.0;
};

// 20 log-spaced ridges on [1e-6, 1e2] by default (empty grid = default);
// K-fold CV with one eigendecomposition per fold shared across the grid.
// Ties select the larger ridge.
KernelCvResult kernel_rlearner_cv(const Eigen::Ref<const MatrixXd>& x,
                                  const VectorXd& pseudo_outcome,
                                  const VectorXd& weight,
                                  const VectorXd& ridge_grid, int cv_folds,
                                  double bandwidth, double cap, Rng rng);

}  // namespace rlearn
