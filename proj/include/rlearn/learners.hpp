#pragma once

// The CATE estimators: R (residual-on-residual weighted regression), RS
// (joint main-effect + treatment-interaction lasso), S (single model with a
// treatment term), T (per-arm models), X (arm models + pseudo-effect
// regressions blended by propensity), U (transformed-outcome regression),
// and the oracle (R with true nuisances). Plus the non-negative stacking
// combiner over candidate CATE models.

#include "rlearn/basis.hpp"
#include "rlearn/boost.hpp"
#include "rlearn/data.hpp"
#include "rlearn/kernel.hpp"
#include "rlearn/lasso.hpp"
#include "rlearn/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rlearn {

enum class LearnerKind { R, RS, S, T, X, U, oracle };

std::string learner_label(LearnerKind kind);
LearnerKind learner_from_label(const std::string& label);

using Predictor = std::function<VectorXd(const Eigen::Ref<const MatrixXd>&)>;

struct LearnerOptions {
  BasisSpec basis;            // lasso-family expansions
  LassoOptions lasso;         // all lasso fits
  BoostSearchOptions boost;   // all boosting searches (loss set internally)
  double u_clip = 0.05;       // U-learner re-clips e-hat to [u_clip, 1-u_clip]
  int x_fold_count = 10;      // X-learner OOF folds when the nuisance carries no plan
  Predictor propensity_override;  // X-learner: replaces the fitted e(x)

  // kernel family (R / oracle only)
  double kernel_bandwidth = 0.0;   // <= 0: median pairwise distance heuristic
  double kernel_cap_scale = 2.0;   // |tau| <= scale * max|y|; <= 0 disables
  int kernel_cv_folds = 5;
  VectorXd kernel_ridge_grid;      // empty: default 20-point log grid
};

// Weighted regression of (y - m_hat)/(w - e_hat) on x with weights
// (w - e_hat)^2; lasso selects the min-CV-loss lambda.
CateModelPtr fit_r_learner(const Dataset& data, const NuisanceEstimates& nuisance,
                           Family family, const LearnerOptions& options, Rng rng);

// Single lasso of y - m_hat on [B | s | s * B] with s = w - e_hat and one
// shared lambda; the lone s column is unpenalized and tau(x) = delta_0 +
// B(x)' delta. Lasso family only.
CateModelPtr fit_rs_learner(const Dataset& data,
                            const NuisanceEstimates& nuisance,
                            const LearnerOptions& options, Rng rng);

// Lasso: y on [B | s | s * B] with s = w - 0.5, tau as in the RS-learner.
// Boost: one model on the augmented features [x, w], tau = f(x,1) - f(x,0).
CateModelPtr fit_s_learner(const Dataset& data, Family family,
                           const LearnerOptions& options, Rng rng);

// Independent per-arm regressions, tau = mu1 - mu0.
CateModelPtr fit_t_learner(const Dataset& data, Family family,
                           const LearnerOptions& options, Rng rng);

// Out-of-fold arm models give pseudo-effects (treated: y - mu0(x); control:
// mu1(x) - y); per-arm effect regressions are blended as
// tau(x) = (1 - e(x)) tau_treated(x) + e(x) tau_control(x).
CateModelPtr fit_x_learner(const Dataset& data, const NuisanceEstimates& nuisance,
                           Family family, const LearnerOptions& options, Rng rng);

// Regression of U = (y - m_hat)/(w - e_hat) on x; lasso picks the
// one-standard-error lambda; e-hat is re-clipped at options.u_clip.
CateModelPtr fit_u_learner(const Dataset& data, const NuisanceEstimates& nuisance,
                           Family family, const LearnerOptions& options, Rng rng);

// fit_r_learner with the ground-truth m*, e* as nuisances (requires
// data.truth). Same code path: identical seed and nuisances give an
// identical model.
CateModelPtr fit_oracle_learner(const Dataset& data, Family family,
                                const LearnerOptions& options, Rng rng);

// Dispatcher used by the benchmark. nuisance may be null for S/T/oracle.
// Throws invalid_argument on unsupported (kind, family) pairs: RS is
// lasso-only; kernel is valid for R and oracle only.
CateModelPtr fit_learner(LearnerKind kind, const Dataset& data,
                         const NuisanceEstimates* nuisance, Family family,
                         const LearnerOptions& options, Rng rng);

// X-learner model with its parts exposed.
class XCateModel : public CateModel {
 public:
  XCateModel(Family family, Predictor tau_treated, Predictor tau_control,
             Predictor propensity)
      : CateModel("X", family),
        tau_treated_(std::move(tau_treated)),
        tau_control_(std::move(tau_control)),
        propensity_(std::move(propensity)) {}

  VectorXd predict(const Eigen::Ref<const MatrixXd>& x) const override;
  VectorXd tau_treated(const Eigen::Ref<const MatrixXd>& x) const {
    return tau_treated_(x);
  }
  VectorXd tau_control(const Eigen::Ref<const MatrixXd>& x) const {
    return tau_control_(x);
  }
  VectorXd propensity(const Eigen::Ref<const MatrixXd>& x) const {
    return propensity_(x);
  }

 private:
  Predictor tau_treated_, tau_control_, propensity_;
};

// Best positive linear combination of candidate CATE models under the
// R-loss: min over (b, c, alpha >= 0) of
//   sum_i ((y_i - m_hat_i) - b - (c + sum_k alpha_k oof_ik)(w_i - e_hat_i))^2
// where oof column k holds candidate k's out-of-fold predictions at x_i.
// b absorbs m-hat bias; c is a free constant effect.
struct StackFit {
  double b = 0.0;
  double c = 0.0;
  VectorXd alpha;  // one non-negative weight per candidate
};

struct StackResult {
  StackFit fit;
  CateModelPtr model;  // tau(x) = c + sum_k alpha_k tau_k(x)
};

StackResult stack_fit(const Dataset& data, const NuisanceEstimates& nuisance,
                      const Eigen::Ref<const MatrixXd>& candidate_oof,
                      std::vector<CateModelPtr> candidates);

}  // namespace rlearn
