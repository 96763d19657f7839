#include "rlearn/crossfit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rlearn {

namespace {

MatrixXd take_rows(const Eigen::Ref<const MatrixXd>& m,
                   const std::vector<int>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

VectorXd take_elems(const VectorXd& v, const std::vector<int>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

}  // namespace

std::vector<std::vector<int>> FoldPlan::fold_indices() const {
  std::vector<std::vector<int>> out(static_cast<size_t>(q));
  for (size_t i = 0; i < fold_of.size(); ++i)
    out[static_cast<size_t>(fold_of[i])].push_back(static_cast<int>(i));
  return out;
}

FoldPlan assign_folds(Index n, int q, Rng rng) {
  if (q < 2) throw std::invalid_argument("assign_folds: need at least 2 folds");
  if (static_cast<Index>(q) > n)
    throw std::invalid_argument("assign_folds: more folds than observations");
  FoldPlan plan;
  plan.q = q;
  plan.seed = rng.seed();
  plan.fold_of = balanced_folds(n, q, rng);
  return plan;
}

VectorXd crossfit_predictions(const Dataset& data, const FoldPlan& plan,
                              const NuisanceSpec& spec, NuisanceRole role,
                              Rng rng) {
  data.validate();
  const Index n = data.n();
  if (static_cast<Index>(plan.fold_of.size()) != n)
    throw std::invalid_argument("crossfit: fold plan does not match dataset");
  if (plan.q < 2) throw std::invalid_argument("crossfit: need at least 2 folds");
  if (spec.clip_eta < 0.0 || spec.clip_eta >= 0.5)
    throw std::invalid_argument("crossfit: clip_eta must lie in [0, 0.5)");

  const bool propensity = role == NuisanceRole::propensity;
  const VectorXd& target = propensity ? data.w : data.y;
  const Stream stream = propensity ? Stream::propensity : Stream::outcome;

  VectorXd pred = VectorXd::Zero(n);
  const auto folds = plan.fold_indices();
  for (int f = 0; f < plan.q; ++f) {
    const auto& held = folds[static_cast<size_t>(f)];
    if (held.empty())
      throw std::invalid_argument("crossfit: fold plan has an empty fold");
    std::vector<int> train;
    train.reserve(static_cast<size_t>(n) - held.size());
    for (Index i = 0; i < n; ++i)
      if (plan.fold_of[static_cast<size_t>(i)] != f) train.push_back(static_cast<int>(i));

    const VectorXd ytr = take_elems(target, train);
    if (propensity) {
      const double s = ytr.sum();
      if (s == 0.0 || s == static_cast<double>(ytr.size()))
        throw std::runtime_error(
            "crossfit: data too small, a training complement holds a single "
            "treatment class");
    }

    const MatrixXd xtr = take_rows(data.x, train);
    const MatrixXd xhe = take_rows(data.x, held);
    const Rng fold_rng = rng.derive(stream, f);

    VectorXd fold_pred;
    if (spec.family == Family::lasso) {
      SplineBasis basis(xtr, spec.basis);
      const MatrixXd ftr = basis.transform(xtr);
      const MatrixXd fhe = basis.transform(xhe);
      if (propensity) {
        LinearPath path = logistic_lasso_path_fit(ftr, ytr, spec.lasso, fold_rng);
        fold_pred = path.predict_min(fhe);
      } else {
        const VectorXd ones = VectorXd::Ones(ytr.size());
        LinearPath path = lasso_path_fit(ftr, ytr, ones, spec.lasso, fold_rng);
        fold_pred = path.predict_min(fhe);
      }
    } else if (spec.family == Family::boost) {
      BoostSearchOptions opt = spec.boost;
      opt.loss = propensity ? BoostLoss::logistic : BoostLoss::squared;
      GbmModel model = boost_fit(xtr, ytr, opt, fold_rng);
      fold_pred = model.predict(xhe);
    } else {
      throw std::invalid_argument("crossfit: nuisance family must be lasso or boost");
    }

    for (size_t i = 0; i < held.size(); ++i) pred[held[i]] = fold_pred[static_cast<Index>(i)];
  }
  return pred;
}

NuisanceEstimates fit_nuisances(const Dataset& data, const FoldPlan& plan,
                                const NuisanceSpec& spec_m,
                                const NuisanceSpec& spec_e, Rng rng) {
  NuisanceEstimates est;
  est.m_hat = crossfit_predictions(data, plan, spec_m, NuisanceRole::outcome, rng);
  est.e_hat =
      crossfit_predictions(data, plan, spec_e, NuisanceRole::propensity, rng);
  const double lo = spec_e.clip_eta;
  const double hi = 1.0 - spec_e.clip_eta;
  for (Index i = 0; i < est.e_hat.size(); ++i)
    est.e_hat[i] = std::min(std::max(est.e_hat[i], lo), hi);
  est.fold_of = plan.fold_of;
  return est;
}

NuisanceSpec cv_select_family(const Dataset& data, const FoldPlan& plan,
                              const std::vector<NuisanceSpec>& candidates,
                              NuisanceRole role, Rng rng) {
  if (candidates.empty())
    throw std::invalid_argument("cv_select_family: no candidates");
  const VectorXd& target = role == NuisanceRole::propensity ? data.w : data.y;
  double best_loss = 0.0;
  size_t best = 0;
  for (size_t c = 0; c < candidates.size(); ++c) {
    const VectorXd pred = crossfit_predictions(data, plan, candidates[c], role,
                                               rng.derive(Stream::search, c));
    double loss = 0.0;
    if (role == NuisanceRole::propensity) {
      for (Index i = 0; i < target.size(); ++i) {
        const double p = std::min(std::max(pred[i], 1e-10), 1.0 - 1e-10);
        loss += -2.0 * (target[i] * std::log(p) +
                        (1.0 - target[i]) * std::log1p(-p));
      }
    } else {
      for (Index i = 0; i < target.size(); ++i) {
        const double d = target[i] - pred[i];
        loss += d * d;
      }
    }
    loss /= static_cast<double>(target.size());
    if (c == 0 || loss < best_loss) {
      best_loss = loss;
      best = c;
    }
  }
  return candidates[best];
}

}  // namespace rlearn
