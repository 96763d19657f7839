#pragma once

// Gradient-boosted regression trees (second-order, exact greedy splits) with
// random hyperparameter search and lockstep K-fold CV on the round count.
// Search grid: subsample {0.5,0.75,1}, column subsample {0.6,0.8,1},
// learning rate {5e-3,1e-2,1.5e-2,2.5e-2,5e-2,8e-2,1e-1,2e-1}, depth 3..20,
// min-split gain ~ U(0,0.2), min child weight 1..20, max delta step 1..10.

#include <vector>

#include "rlearn/data.hpp"
#include "rlearn/rng.hpp"

namespace rlearn {

enum class BoostLoss { squared, logistic };

struct BoostParams {
  double subsample = 1.0;
  double colsample = 1.0;
  double eta = 0.1;
  double gamma = 0.0;          // min split gain
  int max_depth = 6;
  int min_child_weight = 1;    // threshold on child hessian sums
  int max_delta_step = 0;      // 0 = no leaf clamp
  int n_rounds = 0;            // selected by early-stopped CV
  BoostLoss loss = BoostLoss::squared;
};

struct BoostSearchOptions {
  BoostLoss loss = BoostLoss::squared;
  int search_budget = 10;
  int cv_folds = 5;
  int early_stop_rounds = 10;
  int max_rounds = 300;
};

struct BoostTreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // goes left iff x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;      // leaf contribution (learning rate included)
};

struct BoostTree {
  std::vector<BoostTreeNode> nodes;
  double predict_row(const Eigen::Ref<const MatrixXd>& x, Index row) const;
};

class GbmModel {
 public:
  // Probabilities for logistic loss, raw predictions for squared loss.
  VectorXd predict(const Eigen::Ref<const MatrixXd>& x) const;
  VectorXd predict_score(const Eigen::Ref<const MatrixXd>& x) const;

  const BoostParams& params() const { return params_; }
  double cv_loss() const { return cv_loss_; }
  const std::vector<double>& search_cv_losses() const { return search_losses_; }
  Index tree_count() const { return static_cast<Index>(trees_.size()); }

 private:
  friend GbmModel boost_fit(const Eigen::Ref<const MatrixXd>&, const VectorXd&,
                            const BoostSearchOptions&, Rng, const VectorXd&);
  friend GbmModel boost_train(const Eigen::Ref<const MatrixXd>&,
                              const VectorXd&, const BoostParams&, Rng,
                              const VectorXd&);
  double f0_ = 0.0;
  std::vector<BoostTree> trees_;
  BoostParams params_;
  double cv_loss_ = 0.0;
  std::vector<double> search_losses_;  // CV loss of every sampled config
};

// weights may be empty (unweighted). Deterministic given rng.
GbmModel boost_fit(const Eigen::Ref<const MatrixXd>& x, const VectorXd& y,
                   const BoostSearchOptions& options, Rng rng,
                   const VectorXd& weights = VectorXd());

// Trains at a fixed configuration (params.n_rounds rounds, no search, no CV).
// Used when a configuration chosen once must be refit on related subsets.
GbmModel boost_train(const Eigen::Ref<const MatrixXd>& x, const VectorXd& y,
                     const BoostParams& params, Rng rng,
                     const VectorXd& weights = VectorXd());

}  // namespace rlearn
