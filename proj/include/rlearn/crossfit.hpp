#pragma once

// Cross-fitting: fold assignment and out-of-fold nuisance estimation
// (m-hat on y, e-hat on w) with propensity clipping. Each fold's model is
// trained on the complement only; hyperparameters are selected by CV inside
// that complement (nested CV), so held-out rows never influence their own
// predictions.

#include "rlearn/basis.hpp"
#include "rlearn/boost.hpp"
#include "rlearn/data.hpp"
#include "rlearn/lasso.hpp"
#include "rlearn/rng.hpp"

#include <vector>

namespace rlearn {

struct FoldPlan {
  std::vector<int> fold_of;  // observation index -> fold id in {0..q-1}
  int q = 0;
  std::uint64_t seed = 0;

  std::vector<std::vector<int>> fold_indices() const;
};

// Uniformly random partition into q folds of size ceil(n/q) or floor(n/q).
// Throws std::invalid_argument unless 2 <= q <= n.
FoldPlan assign_folds(Index n, int q, Rng rng);

struct NuisanceSpec {
  Family family = Family::lasso;  // lasso | boost
  BasisSpec basis;                // lasso family only
  LassoOptions lasso;             // lasso family only (nested-CV controls)
  BoostSearchOptions boost;       // boost family only (loss set per role)
  double clip_eta = 0.01;         // propensity clip level, in [0, 0.5)
};

enum class NuisanceRole { outcome, propensity };

// Out-of-fold predictions for one role: for each fold, fit the spec's model
// on the complement and predict the held-out fold. Propensity fits require
// both treatment classes in every complement (else a data-too-small error)
// and return raw probabilities (no clipping here).
VectorXd crossfit_predictions(const Dataset& data, const FoldPlan& plan,
                              const NuisanceSpec& spec, NuisanceRole role,
                              Rng rng);

// Full nuisance pass: m-hat via spec_m, e-hat via spec_e clipped to
// [clip_eta, 1 - clip_eta].
NuisanceEstimates fit_nuisances(const Dataset& data, const FoldPlan& plan,
                                const NuisanceSpec& spec_m,
                                const NuisanceSpec& spec_e, Rng rng);

// Picks the candidate with the smallest out-of-fold loss for the role
// (squared error for outcome, binomial deviance for propensity). Ties break
// toward the earlier candidate.
NuisanceSpec cv_select_family(const Dataset& data, const FoldPlan& plan,
                              const std::vector<NuisanceSpec>& candidates,
                              NuisanceRole role, Rng rng);

}  // namespace rlearn
