#include "rlearn/learners.hpp"

#include "rlearn/crossfit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <utility>

namespace rlearn {

namespace {

MatrixXd take_rows(const Eigen::Ref<const MatrixXd>& m,
                   const std::vector<int>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

VectorXd take_elems(const VectorXd& v, const std::vector<int>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

// Every model except X is a label + closure.
class PredictorModel final : public CateModel {
 public:
  PredictorModel(std::string label, Family family, Predictor fn,
                 std::map<std::string, double> hyper = {})
      : CateModel(std::move(label), family), fn_(std::move(fn)) {
    hyper_ = std::move(hyper);
  }
  VectorXd predict(const Eigen::Ref<const MatrixXd>& x) const override {
    return fn_(x);
  }

 private:
  Predictor fn_;
};

struct SelectedLinear {
  VectorXd coef;
  double intercept = 0.0;
  double lambda = 0.0;
};

SelectedLinear lasso_select(const Eigen::Ref<const MatrixXd>& design,
                            const VectorXd& target, const VectorXd& weights,
                            const LassoOptions& options, Rng rng, bool one_se) {
  const VectorXd w =
      weights.size() > 0 ? weights : VectorXd::Ones(target.size());
  LinearPath path = lasso_path_fit(design, target, w, options, rng);
  const Index idx = one_se ? path.index_1se : path.index_min;
  return {path.coefficients.row(idx).transpose(), path.intercepts[idx],
          path.lambda_grid[idx]};
}

Predictor basis_affine_predictor(std::shared_ptr<const SplineBasis> basis,
                                 VectorXd coef, double intercept) {
  return [basis = std::move(basis), coef = std::move(coef),
          intercept](const Eigen::Ref<const MatrixXd>& x) -> VectorXd {
    return ((basis->transform(x) * coef).array() + intercept).matrix();
  };
}

// tau(x) = B(x)' delta with no intercept (RS / S treatment block).
Predictor basis_linear_predictor(std::shared_ptr<const SplineBasis> basis,
                                 VectorXd delta) {
  return [basis = std::move(basis),
          delta = std::move(delta)](const Eigen::Ref<const MatrixXd>& x)
             -> VectorXd { return basis->transform(x) * delta; };
}

Predictor boost_predictor(GbmModel model) {
  auto shared = std::make_shared<GbmModel>(std::move(model));
  return [shared](const Eigen::Ref<const MatrixXd>& x) -> VectorXd {
    return shared->predict(x);
  };
}

void require_nuisance_shape(const Dataset& data,
                            const NuisanceEstimates& nuisance,
                            const char* who) {
  if (nuisance.m_hat.size() != data.n() || nuisance.e_hat.size() != data.n())
    throw std::invalid_argument(std::string(who) +
                                ": nuisance estimates do not match dataset");
}

// Shared by the R-learner and the oracle (which swaps in true nuisances).
CateModelPtr fit_r_impl(const Dataset& data, const NuisanceEstimates& nuisance,
                        Family family, const LearnerOptions& options, Rng rng,
                        const std::string& label) {
  data.validate();
  require_nuisance_shape(data, nuisance, "fit_r_learner");
  const RobinsonParts parts = robinson_residualize(data, nuisance);

  if (family == Family::lasso) {
    auto basis = std::make_shared<const SplineBasis>(data.x, options.basis);
    const MatrixXd design = basis->transform(data.x);
    SelectedLinear sel = lasso_select(design, parts.pseudo_outcome,
                                      parts.weight, options.lasso, rng,
                                      /*one_se=*/false);
    return std::make_shared<PredictorModel>(
        label, family,
        basis_affine_predictor(basis, std::move(sel.coef), sel.intercept),
        std::map<std::string, double>{{"lambda", sel.lambda}});
  }
  if (family == Family::boost) {
    BoostSearchOptions opt = options.boost;
    opt.loss = BoostLoss::squared;
    GbmModel model =
        boost_fit(data.x, parts.pseudo_outcome, opt, rng, parts.weight);
    const double rounds = static_cast<double>(model.params().n_rounds);
    return std::make_shared<PredictorModel>(
        label, family, boost_predictor(std::move(model)),
        std::map<std::string, double>{{"rounds", rounds}});
  }
  // kernel
  const double bandwidth = options.kernel_bandwidth > 0.0
                               ? options.kernel_bandwidth
                               : median_pairwise_bandwidth(data.x);
  const double cap = options.kernel_cap_scale > 0.0
                         ? options.kernel_cap_scale *
                               data.y.cwiseAbs().maxCoeff()
                         : 0.0;
  KernelCvResult cv = kernel_rlearner_cv(
      data.x, parts.pseudo_outcome, parts.weight, options.kernel_ridge_grid,
      options.kernel_cv_folds, bandwidth, cap, rng);
  auto shared = std::make_shared<KernelModel>(std::move(cv.model));
  return std::make_shared<PredictorModel>(
      label, family,
      [shared](const Eigen::Ref<const MatrixXd>& x) -> VectorXd {
        return shared->predict(x);
      },
      std::map<std::string, double>{{"ridge", cv.ridge_selected},
                                    {"bandwidth", bandwidth}});
}

// Joint main-effect/treatment-block lasso used by both RS (s = w - e_hat,
// target y - m_hat) and S (s = w - 0.5, target y). The treatment block is
// s * [1 | B]: its leading constant-effect column is unpenalized (like the
// main intercept), so a constant component of tau is not shrunk away;
// tau(x) = delta_0 + B(x)' delta.
CateModelPtr fit_joint_block_lasso(const Dataset& data, const VectorXd& shift,
                                   const VectorXd& target,
                                   const LearnerOptions& options, Rng rng,
                                   const std::string& label) {
  auto basis = std::make_shared<const SplineBasis>(data.x, options.basis);
  const MatrixXd b = basis->transform(data.x);
  const Index p = b.cols();
  MatrixXd design(data.n(), 2 * p + 1);
  design.leftCols(p) = b;
  design.col(p) = shift;
  design.rightCols(p) = shift.asDiagonal() * b;
  LassoOptions opt = options.lasso;
  opt.penalty_factor = VectorXd::Ones(2 * p + 1);
  opt.penalty_factor[p] = 0.0;
  SelectedLinear sel =
      lasso_select(design, target, VectorXd(), opt, rng, /*one_se=*/false);
  const double delta0 = sel.coef[p];
  VectorXd delta = sel.coef.tail(p);
  return std::make_shared<PredictorModel>(
      label, Family::lasso,
      basis_affine_predictor(basis, std::move(delta), delta0),
      std::map<std::string, double>{{"lambda", sel.lambda}});
}

std::vector<int> arm_rows(const Dataset& data, double arm) {
  std::vector<int> rows;
  for (Index i = 0; i < data.n(); ++i)
    if (data.w[i] == arm) rows.push_back(static_cast<int>(i));
  return rows;
}

void require_arm_size(size_t count, int folds, const char* who) {
  if (count < 2 * static_cast<size_t>(folds))
    throw std::runtime_error(std::string(who) +
                             ": data too small, a treatment arm has fewer "
                             "than 2*cv_folds observations");
}

// Recover the fold plan the nuisances were fit with, or draw a fresh one.
std::vector<int> resolve_fold_plan(const Dataset& data,
                                   const NuisanceEstimates& nuisance,
                                   int fallback_folds, Rng rng) {
  const Index n = data.n();
  if (static_cast<Index>(nuisance.fold_of.size()) == n) {
    int hi = 0;
    bool ok = true;
    for (int f : nuisance.fold_of) {
      if (f < 0) ok = false;
      hi = std::max(hi, f);
    }
    if (ok && hi >= 1) return nuisance.fold_of;
  }
  const int q = static_cast<int>(
      std::min<Index>(std::max(2, fallback_folds), n));
  return assign_folds(n, q, rng.derive(Stream::folds)).fold_of;
}

}  // namespace

std::string learner_label(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::R: return "R";
    case LearnerKind::RS: return "RS";
    case LearnerKind::S: return "S";
    case LearnerKind::T: return "T";
    case LearnerKind::X: return "X";
    case LearnerKind::U: return "U";
    case LearnerKind::oracle: return "oracle";
  }
  throw std::invalid_argument("learner_label: unknown learner");
}

LearnerKind learner_from_label(const std::string& label) {
  std::string up = label;
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "R") return LearnerKind::R;
  if (up == "RS") return LearnerKind::RS;
  if (up == "S") return LearnerKind::S;
  if (up == "T") return LearnerKind::T;
  if (up == "X") return LearnerKind::X;
  if (up == "U") return LearnerKind::U;
  if (up == "ORACLE" || up == "O") return LearnerKind::oracle;
  throw std::invalid_argument("unknown learner label: " + label);
}

VectorXd XCateModel::predict(const Eigen::Ref<const MatrixXd>& x) const {
  const VectorXd e = propensity_(x);
  const VectorXd t1 = tau_treated_(x);
  const VectorXd t0 = tau_control_(x);
  return ((VectorXd::Ones(x.rows()) - e).array() * t1.array() +
          e.array() * t0.array())
      .matrix();
}

CateModelPtr fit_r_learner(const Dataset& data,
                           const NuisanceEstimates& nuisance, Family family,
                           const LearnerOptions& options, Rng rng) {
  return fit_r_impl(data, nuisance, family, options, rng, "R");
}

CateModelPtr fit_rs_learner(const Dataset& data,
                            const NuisanceEstimates& nuisance,
                            const LearnerOptions& options, Rng rng) {
  data.validate();
  require_nuisance_shape(data, nuisance, "fit_rs_learner");
  const VectorXd shift = data.w - nuisance.e_hat;
  const VectorXd target = data.y - nuisance.m_hat;
  return fit_joint_block_lasso(data, shift, target, options, rng, "RS");
}

CateModelPtr fit_s_learner(const Dataset& data, Family family,
                           const LearnerOptions& options, Rng rng) {
  data.validate();
  if (family == Family::lasso) {
    const VectorXd shift = data.w.array() - 0.5;
    return fit_joint_block_lasso(data, shift, data.y, options, rng, "S");
  }
  if (family != Family::boost)
    throw std::invalid_argument("fit_s_learner: family must be lasso or boost");
  const Index n = data.n();
  const Index d = data.d();
  MatrixXd augmented(n, d + 1);
  augmented.leftCols(d) = data.x;
  augmented.col(d) = data.w;
  BoostSearchOptions opt = options.boost;
  opt.loss = BoostLoss::squared;
  auto model = std::make_shared<GbmModel>(boost_fit(augmented, data.y, opt, rng));
  const double rounds = static_cast<double>(model->params().n_rounds);
  Predictor fn = [model, d](const Eigen::Ref<const MatrixXd>& x) -> VectorXd {
    MatrixXd aug(x.rows(), d + 1);
    aug.leftCols(d) = x;
    aug.col(d).setOnes();
    const VectorXd on = model->predict_score(aug);
    aug.col(d).setZero();
    const VectorXd off = model->predict_score(aug);
    return on - off;
  };
  return std::make_shared<PredictorModel>(
      "S", family, std::move(fn),
      std::map<std::string, double>{{"rounds", rounds}});
}

CateModelPtr fit_t_learner(const Dataset& data, Family family,
                           const LearnerOptions& options, Rng rng) {
  data.validate();
  const std::vector<int> treated = arm_rows(data, 1.0);
  const std::vector<int> control = arm_rows(data, 0.0);

  if (family == Family::lasso) {
    require_arm_size(treated.size(), options.lasso.cv_folds, "fit_t_learner");
    require_arm_size(control.size(), options.lasso.cv_folds, "fit_t_learner");
    auto basis = std::make_shared<const SplineBasis>(data.x, options.basis);
    const MatrixXd b = basis->transform(data.x);
    // Both arms reuse one derived stream: they train on disjoint rows, and
    // identical duplicated arms then produce bit-identical fits (tau == 0).
    const Rng arm_rng = rng.derive(Stream::train);
    SelectedLinear s1 =
        lasso_select(take_rows(b, treated), take_elems(data.y, treated),
                     VectorXd(), options.lasso, arm_rng, false);
    SelectedLinear s0 =
        lasso_select(take_rows(b, control), take_elems(data.y, control),
                     VectorXd(), options.lasso, arm_rng, false);
    VectorXd diff = s1.coef - s0.coef;
    const double b0 = s1.intercept - s0.intercept;
    return std::make_shared<PredictorModel>(
        "T", family, basis_affine_predictor(basis, std::move(diff), b0),
        std::map<std::string, double>{{"lambda_treated", s1.lambda},
                                      {"lambda_control", s0.lambda}});
  }
  if (family != Family::boost)
    throw std::invalid_argument("fit_t_learner: family must be lasso or boost");
  require_arm_size(treated.size(), options.boost.cv_folds, "fit_t_learner");
  require_arm_size(control.size(), options.boost.cv_folds, "fit_t_learner");
  BoostSearchOptions opt = options.boost;
  opt.loss = BoostLoss::squared;
  const Rng arm_rng = rng.derive(Stream::train);
  auto m1 = std::make_shared<GbmModel>(boost_fit(
      take_rows(data.x, treated), take_elems(data.y, treated), opt, arm_rng));
  auto m0 = std::make_shared<GbmModel>(boost_fit(
      take_rows(data.x, control), take_elems(data.y, control), opt, arm_rng));
  Predictor fn = [m1, m0](const Eigen::Ref<const MatrixXd>& x) -> VectorXd {
    return m1->predict_score(x) - m0->predict_score(x);
  };
  return std::make_shared<PredictorModel>("T", family, std::move(fn));
}

CateModelPtr fit_x_learner(const Dataset& data,
                           const NuisanceEstimates& nuisance, Family family,
                           const LearnerOptions& options, Rng rng) {
  data.validate();
  if (family != Family::lasso && family != Family::boost)
    throw std::invalid_argument("fit_x_learner: family must be lasso or boost");
  const Index n = data.n();
  const std::vector<int> treated = arm_rows(data, 1.0);
  const std::vector<int> control = arm_rows(data, 0.0);
  const int family_folds = family == Family::lasso ? options.lasso.cv_folds
                                                   : options.boost.cv_folds;
  require_arm_size(treated.size(), family_folds, "fit_x_learner");
  require_arm_size(control.size(), family_folds, "fit_x_learner");

  const std::vector<int> fold_of =
      resolve_fold_plan(data, nuisance, options.x_fold_count, rng);
  int fold_count = 0;
  for (int f : fold_of) fold_count = std::max(fold_count, f + 1);

  std::shared_ptr<const SplineBasis> basis;
  MatrixXd b;
  BoostParams par1, par0;  // boost family: configuration chosen once per arm
  if (family == Family::lasso) {
    basis = std::make_shared<const SplineBasis>(data.x, options.basis);
    b = basis->transform(data.x);
  } else {
    BoostSearchOptions opt = options.boost;
    opt.loss = BoostLoss::squared;
    par1 = boost_fit(take_rows(data.x, treated), take_elems(data.y, treated),
                     opt, rng.derive(Stream::arm1))
               .params();
    par0 = boost_fit(take_rows(data.x, control), take_elems(data.y, control),
                     opt, rng.derive(Stream::arm0))
               .params();
  }

  // Out-of-fold cross-arm outcome predictions: for each fold, each arm's
  // model is trained on that arm's rows outside the fold and evaluated on
  // the *other* arm's rows inside the fold.
  VectorXd mu0_at(n), mu1_at(n);  // filled on treated / control rows
  for (int f = 0; f < fold_count; ++f) {
    std::vector<int> tr1, tr0, he1, he0;
    for (Index i = 0; i < n; ++i) {
      const bool held = fold_of[static_cast<size_t>(i)] == f;
      const bool is_treated = data.w[i] == 1.0;
      if (held) {
        (is_treated ? he1 : he0).push_back(static_cast<int>(i));
      } else {
        (is_treated ? tr1 : tr0).push_back(static_cast<int>(i));
      }
    }
    if (tr1.empty() || tr0.empty())
      throw std::runtime_error(
          "fit_x_learner: data too small, a fold complement lost an arm");
    if (family == Family::lasso) {
      if (!he1.empty()) {
        SelectedLinear s0 =
            lasso_select(take_rows(b, tr0), take_elems(data.y, tr0), VectorXd(),
                         options.lasso, rng.derive(Stream::arm0, f), false);
        const VectorXd pred =
            (take_rows(b, he1) * s0.coef).array() + s0.intercept;
        for (size_t i = 0; i < he1.size(); ++i)
          mu0_at[he1[i]] = pred[static_cast<Index>(i)];
      }
      if (!he0.empty()) {
        SelectedLinear s1 =
            lasso_select(take_rows(b, tr1), take_elems(data.y, tr1), VectorXd(),
                         options.lasso, rng.derive(Stream::arm1, f), false);
        const VectorXd pred =
            (take_rows(b, he0) * s1.coef).array() + s1.intercept;
        for (size_t i = 0; i < he0.size(); ++i)
          mu1_at[he0[i]] = pred[static_cast<Index>(i)];
      }
    } else {
      if (!he1.empty()) {
        const GbmModel m0 =
            boost_train(take_rows(data.x, tr0), take_elems(data.y, tr0), par0,
                        rng.derive(Stream::arm0, f));
        const VectorXd pred = m0.predict(take_rows(data.x, he1));
        for (size_t i = 0; i < he1.size(); ++i)
          mu0_at[he1[i]] = pred[static_cast<Index>(i)];
      }
      if (!he0.empty()) {
        const GbmModel m1 =
            boost_train(take_rows(data.x, tr1), take_elems(data.y, tr1), par1,
                        rng.derive(Stream::arm1, f));
        const VectorXd pred = m1.predict(take_rows(data.x, he0));
        for (size_t i = 0; i < he0.size(); ++i)
          mu1_at[he0[i]] = pred[static_cast<Index>(i)];
      }
    }
  }

  // Pseudo-effects and the per-arm effect regressions.
  VectorXd d1(static_cast<Index>(treated.size()));
  for (size_t i = 0; i < treated.size(); ++i)
    d1[static_cast<Index>(i)] = data.y[treated[i]] - mu0_at[treated[i]];
  VectorXd d0(static_cast<Index>(control.size()));
  for (size_t i = 0; i < control.size(); ++i)
    d0[static_cast<Index>(i)] = mu1_at[control[i]] - data.y[control[i]];

  Predictor tau1, tau0;
  if (family == Family::lasso) {
    SelectedLinear s1 = lasso_select(take_rows(b, treated), d1, VectorXd(),
                                     options.lasso,
                                     rng.derive(Stream::train, 1), false);
    SelectedLinear s0 = lasso_select(take_rows(b, control), d0, VectorXd(),
                                     options.lasso,
                                     rng.derive(Stream::train, 0), false);
    tau1 = basis_affine_predictor(basis, std::move(s1.coef), s1.intercept);
    tau0 = basis_affine_predictor(basis, std::move(s0.coef), s0.intercept);
  } else {
    BoostSearchOptions opt = options.boost;
    opt.loss = BoostLoss::squared;
    tau1 = boost_predictor(boost_fit(take_rows(data.x, treated), d1, opt,
                                     rng.derive(Stream::train, 1)));
    tau0 = boost_predictor(boost_fit(take_rows(data.x, control), d0, opt,
                                     rng.derive(Stream::train, 0)));
  }

  // Blend weight: a full-data propensity model, unless overridden.
  Predictor prop;
  if (options.propensity_override) {
    prop = options.propensity_override;
  } else if (family == Family::lasso) {
    LinearPath path = logistic_lasso_path_fit(basis->transform(data.x), data.w,
                                              options.lasso,
                                              rng.derive(Stream::propensity));
    const VectorXd coef = path.coefficients.row(path.index_min).transpose();
    const double b0 = path.intercepts[path.index_min];
    auto shared_basis = basis;
    prop = [shared_basis, coef,
            b0](const Eigen::Ref<const MatrixXd>& x) -> VectorXd {
      VectorXd eta = (shared_basis->transform(x) * coef).array() + b0;
      for (Index i = 0; i < eta.size(); ++i)
        eta[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      return eta;
    };
  } else {
    BoostSearchOptions opt = options.boost;
    opt.loss = BoostLoss::logistic;
    prop = boost_predictor(
        boost_fit(data.x, data.w, opt, rng.derive(Stream::propensity)));
  }

  return std::make_shared<XCateModel>(family, std::move(tau1), std::move(tau0),
                                      std::move(prop));
}

CateModelPtr fit_u_learner(const Dataset& data,
                           const NuisanceEstimates& nuisance, Family family,
                           const LearnerOptions& options, Rng rng) {
  data.validate();
  require_nuisance_shape(data, nuisance, "fit_u_learner");
  if (options.u_clip <= 0.0 || options.u_clip >= 0.5)
    throw std::invalid_argument("fit_u_learner: u_clip must lie in (0, 0.5)");
  const Index n = data.n();
  VectorXd u(n);
  for (Index i = 0; i < n; ++i) {
    const double e =
        std::min(std::max(nuisance.e_hat[i], options.u_clip),
                 1.0 - options.u_clip);
    u[i] = (data.y[i] - nuisance.m_hat[i]) / (data.w[i] - e);
  }
  if (family == Family::lasso) {
    auto basis = std::make_shared<const SplineBasis>(data.x, options.basis);
    SelectedLinear sel =
        lasso_select(basis->transform(data.x), u, VectorXd(), options.lasso,
                     rng, /*one_se=*/true);
    return std::make_shared<PredictorModel>(
        "U", family,
        basis_affine_predictor(basis, std::move(sel.coef), sel.intercept),
        std::map<std::string, double>{{"lambda", sel.lambda}});
  }
  if (family != Family::boost)
    throw std::invalid_argument("fit_u_learner: family must be lasso or boost");
  BoostSearchOptions opt = options.boost;
  opt.loss = BoostLoss::squared;
  return std::make_shared<PredictorModel>(
      "U", family, boost_predictor(boost_fit(data.x, u, opt, rng)));
}

CateModelPtr fit_oracle_learner(const Dataset& data, Family family,
                                const LearnerOptions& options, Rng rng) {
  if (!data.truth.has_value())
    throw std::invalid_argument("fit_oracle_learner: dataset carries no ground truth");
  NuisanceEstimates truth;
  truth.m_hat = data.truth->m_star;
  truth.e_hat = data.truth->e_star;
  return fit_r_impl(data, truth, family, options, rng, "oracle");
}

CateModelPtr fit_learner(LearnerKind kind, const Dataset& data,
                         const NuisanceEstimates* nuisance, Family family,
                         const LearnerOptions& options, Rng rng) {
  if (kind == LearnerKind::RS && family != Family::lasso)
    throw std::invalid_argument("fit_learner: RS is defined for the lasso family only");
  if (family == Family::kernel && kind != LearnerKind::R &&
      kind != LearnerKind::oracle)
    throw std::invalid_argument(
        "fit_learner: kernel family supports only R and oracle");
  const bool needs_nuisance =
      kind == LearnerKind::R || kind == LearnerKind::RS ||
      kind == LearnerKind::X || kind == LearnerKind::U;
  if (needs_nuisance && nuisance == nullptr)
    throw std::invalid_argument("fit_learner: " + learner_label(kind) +
                                " requires nuisance estimates");
  switch (kind) {
    case LearnerKind::R:
      return fit_r_learner(data, *nuisance, family, options, rng);
    case LearnerKind::RS:
      return fit_rs_learner(data, *nuisance, options, rng);
    case LearnerKind::S:
      return fit_s_learner(data, family, options, rng);
    case LearnerKind::T:
      return fit_t_learner(data, family, options, rng);
    case LearnerKind::X:
      return fit_x_learner(data, *nuisance, family, options, rng);
    case LearnerKind::U:
      return fit_u_learner(data, *nuisance, family, options, rng);
    case LearnerKind::oracle:
      return fit_oracle_learner(data, family, options, rng);
  }
  throw std::invalid_argument("fit_learner: unknown learner");
}

StackResult stack_fit(const Dataset& data, const NuisanceEstimates& nuisance,
                      const Eigen::Ref<const MatrixXd>& candidate_oof,
                      std::vector<CateModelPtr> candidates) {
  data.validate();
  require_nuisance_shape(data, nuisance, "stack_fit");
  const Index n = data.n();
  const Index k = candidate_oof.cols();
  if (candidate_oof.rows() != n && k > 0)
    throw std::invalid_argument("stack_fit: candidate matrix does not match dataset");
  if (static_cast<Index>(candidates.size()) != k)
    throw std::invalid_argument("stack_fit: candidate models do not match matrix");

  const VectorXd r = data.y - nuisance.m_hat;
  const VectorXd s = data.w - nuisance.e_hat;

  // Columns: intercept b, constant effect c (both free), then one
  // non-negative weight per candidate.
  MatrixXd a(n, 2 + k);
  a.col(0).setOnes();
  a.col(1) = s;
  for (Index j = 0; j < k; ++j)
    a.col(2 + j) = s.cwiseProduct(candidate_oof.col(j));

  const Index m = 2 + k;
  VectorXd x = VectorXd::Zero(m);
  std::vector<char> passive(static_cast<size_t>(m), 0);
  passive[0] = passive[1] = 1;
  std::vector<char> banned(static_cast<size_t>(m), 0);

  const auto solve_passive = [&]() -> VectorXd {
    std::vector<int> cols;
    for (Index j = 0; j < m; ++j)
      if (passive[static_cast<size_t>(j)]) cols.push_back(static_cast<int>(j));
    MatrixXd sub(n, static_cast<Index>(cols.size()));
    for (size_t i = 0; i < cols.size(); ++i)
      sub.col(static_cast<Index>(i)) = a.col(cols[i]);
    const VectorXd z = sub.colPivHouseholderQr().solve(r);
    VectorXd full = VectorXd::Zero(m);
    for (size_t i = 0; i < cols.size(); ++i)
      full[cols[i]] = z[static_cast<Index>(i)];
    return full;
  };

  x = solve_passive();  // b, c alone
  const double scale =
      std::max(1.0, (a.transpose() * (r - a * x)).cwiseAbs().maxCoeff());
  const double tol = 1e-10 * scale;

  // Active-set non-negative least squares; b and c stay passive throughout.
  const int max_outer = 30 * static_cast<int>(m);
  for (int iter = 0; iter < max_outer; ++iter) {
    const VectorXd grad = a.transpose() * (r - a * x);
    Index enter = -1;
    double best = tol;
    for (Index j = 2; j < m; ++j) {
      if (passive[static_cast<size_t>(j)] || banned[static_cast<size_t>(j)])
        continue;
      if (grad[j] > best) {
        best = grad[j];
        enter = j;
      }
    }
    if (enter < 0) break;
    passive[static_cast<size_t>(enter)] = 1;

    for (int inner = 0; inner < max_outer; ++inner) {
      VectorXd z = solve_passive();
      double step = 1.0;
      bool violated = false;
      for (Index j = 2; j < m; ++j) {
        if (!passive[static_cast<size_t>(j)] || z[j] > 0.0) continue;
        violated = true;
        const double denom = x[j] - z[j];
        if (denom > 0.0) step = std::min(step, x[j] / denom);
      }
      if (!violated) {
        x = z;
        break;
      }
      x += step * (z - x);
      for (Index j = 2; j < m; ++j)
        if (passive[static_cast<size_t>(j)] && x[j] <= 1e-14) {
          passive[static_cast<size_t>(j)] = 0;
          x[j] = 0.0;
        }
    }
    if (!passive[static_cast<size_t>(enter)] && x[enter] == 0.0)
      banned[static_cast<size_t>(enter)] = 1;  // zero-step safeguard
  }

  StackResult out;
  out.fit.b = x[0];
  out.fit.c = x[1];
  out.fit.alpha = x.tail(k);
  const double c = out.fit.c;
  const VectorXd alpha = out.fit.alpha;
  auto held = std::make_shared<std::vector<CateModelPtr>>(std::move(candidates));
  Predictor fn = [c, alpha, held](const Eigen::Ref<const MatrixXd>& xq) -> VectorXd {
    VectorXd pred = VectorXd::Constant(xq.rows(), c);
    for (Index j = 0; j < alpha.size(); ++j)
      if (alpha[j] != 0.0) pred += alpha[j] * (*held)[static_cast<size_t>(j)]->predict(xq);
    return pred;
  };
  out.model = std::make_shared<PredictorModel>("stack", Family::lasso,
                                               std::move(fn));
  return out;
}

}  // namespace rlearn
