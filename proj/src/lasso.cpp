#include "rlearn/lasso.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <random>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rlearn {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double sigmoid(double eta) {
  if (eta >= 0.0) {
    const double e = std::exp(-eta);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

constexpr double kKktSlack = 1e-12;

struct Standardization {
  VectorXd mean;              // per-column shift (weighted mean; always applied)
  VectorXd scale;             // per-column divisor (1 when standardize=false)
  std::vector<char> included; // constant columns are frozen at zero
};

// Standardize + fold in sqrt-weights so weighted inner products become plain
// BLAS-1 dots on unit-norm columns.
Standardization standardize_columns(const Eigen::Ref<const MatrixXd>& f,
                                    const VectorXd& v, bool standardize) {
  const Index p = f.cols();
  Standardization s;
  s.mean = VectorXd::Zero(p);
  s.scale = VectorXd::Ones(p);
  s.included.assign(static_cast<size_t>(p), 1);
  for (Index j = 0; j < p; ++j) {
    const double m = v.dot(f.col(j));
    const double ex2 = v.dot(f.col(j).cwiseProduct(f.col(j)));
    const double var = std::max(ex2 - m * m, 0.0);
    s.mean[j] = m;
    if (standardize) {
      const double sd = std::sqrt(var);
      if (sd > 1e-10 * (1.0 + std::abs(m))) {
        s.scale[j] = sd;
      } else {
        s.included[static_cast<size_t>(j)] = 0;
      }
    } else if (var <= 1e-20 * (1.0 + m * m)) {
      s.included[static_cast<size_t>(j)] = 0;
    }
  }
  return s;
}

VectorXd resolve_penalty_factor(const LassoOptions& opt, Index p) {
  if (opt.penalty_factor.size() == 0) return VectorXd::Ones(p);
  if (opt.penalty_factor.size() != p)
    throw std::invalid_argument("penalty_factor length must match feature count");
  for (Index j = 0; j < p; ++j) {
    const double pf = opt.penalty_factor[j];
    if (!std::isfinite(pf) || pf < 0.0)
      throw std::invalid_argument("penalty_factor entries must be finite and >= 0");
  }
  return opt.penalty_factor;
}

VectorXd log_spaced_grid(double lambda_max, int n_lambda, double ratio) {
  VectorXd grid(n_lambda);
  if (n_lambda == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double lo = std::log(lambda_max * ratio);
  const double hi = std::log(lambda_max);
  for (int k = 0; k < n_lambda; ++k)
    grid[k] = std::exp(hi + (lo - hi) * static_cast<double>(k) /
                                static_cast<double>(n_lambda - 1));
  grid[0] = lambda_max;  // exact, so the first fit is all-zero by KKT
  return grid;
}

// Fitted path on the standardized scale, before back-transformation.
struct CorePath {
  VectorXd grid;
  MatrixXd beta;       // grid length x p
  VectorXd intercept;  // standardized-scale intercept (logistic only)
  Standardization std_info;
  double ybar = 0.0;   // weighted target mean (gaussian centering)
  bool degenerate = false;
};

void back_transform(const CorePath& core, MatrixXd* coef, VectorXd* b0,
                    bool gaussian) {
  const Index L = core.grid.size();
  const Index p = core.beta.cols();
  coef->resize(L, p);
  b0->resize(L);
  for (Index k = 0; k < L; ++k) {
    double shift = gaussian ? core.ybar : core.intercept[k];
    for (Index j = 0; j < p; ++j) {
      const double bs = core.beta(k, j) / core.std_info.scale[j];
      (*coef)(k, j) = bs;
      shift -= bs * core.std_info.mean[j];
    }
    (*b0)[k] = shift;
  }
}

// ---------------------------------------------------------------------------
// Gaussian core

CorePath gaussian_core(const Eigen::Ref<const MatrixXd>& features,
                       const VectorXd& target, const VectorXd& weights,
                       const LassoOptions& opt, const VectorXd& fixed_grid) {
  const Index n = features.rows();
  const Index p = features.cols();
  if (n < 1 || p < 1) throw std::invalid_argument("lasso: empty design");
  if (target.size() != n || weights.size() != n)
    throw std::invalid_argument("lasso: target/weights length mismatch");
  double wsum = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(target[i])) throw std::invalid_argument("lasso: non-finite target");
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      throw std::invalid_argument("lasso: weights must be finite and >= 0");
    wsum += weights[i];
  }
  if (wsum <= 0.0) throw std::invalid_argument("lasso: weights sum to zero");

  const VectorXd v = weights / wsum;       // normalized: grid invariant to weight scaling
  const VectorXd sqw = v.cwiseSqrt();
  const double ybar = v.dot(target);
  const VectorXd pf = resolve_penalty_factor(opt, p);

  CorePath core;
  core.std_info = standardize_columns(features, v, opt.standardize);
  core.ybar = ybar;

  VectorXd rtil(n);  // sqrt-weighted residual of the centered target
  for (Index i = 0; i < n; ++i) rtil[i] = sqw[i] * (target[i] - ybar);
  const double tvar = rtil.squaredNorm();
  // Stopping threshold in standardized-response units (glmnet measures
  // coefficient moves against the null deviance, so targets with large
  // scale - e.g. inverse-propensity pseudo-outcomes - don't grind).
  const double thresh = opt.tol * std::max(tvar, 1e-12);
  if (tvar <= 1e-12 * std::max(1.0, ybar * ybar)) {
    core.degenerate = true;
    core.grid = fixed_grid.size() > 0
                    ? fixed_grid
                    : log_spaced_grid(1.0, opt.n_lambda, opt.lambda_min_ratio);
    core.beta = MatrixXd::Zero(core.grid.size(), p);
    return core;
  }

  MatrixXd z(n, p);
  for (Index j = 0; j < p; ++j) {
    if (!core.std_info.included[static_cast<size_t>(j)]) {
      z.col(j).setZero();
      continue;
    }
    z.col(j) = sqw.cwiseProduct(features.col(j).array().matrix() -
                                VectorXd::Constant(n, core.std_info.mean[j]));
    z.col(j) /= core.std_info.scale[j];
  }
  VectorXd curvature(p);
  for (Index j = 0; j < p; ++j) curvature[j] = z.col(j).squaredNorm();
  for (Index j = 0; j < p; ++j)
    if (curvature[j] <= 1e-24) core.std_info.included[static_cast<size_t>(j)] = 0;

  VectorXd beta = VectorXd::Zero(p);
  const auto is_in = [&](Index j) {
    return core.std_info.included[static_cast<size_t>(j)] != 0;
  };

  // One full sweep over idx; returns the largest curvature-scaled squared
  // coefficient change (the usual coordinate-descent stopping statistic).
  const auto sweep = [&](const std::vector<int>& idx, double lam) {
    double max_delta = 0.0;
    for (int j : idx) {
      const double cj = curvature[j];
      const double g = z.col(j).dot(rtil);
      const double bj = beta[j];
      const double bnew = soft_threshold(g + cj * bj, lam * pf[j]) / cj;
      const double delta = bnew - bj;
      if (delta != 0.0) {
        rtil.noalias() -= delta * z.col(j);
        beta[j] = bnew;
        max_delta = std::max(max_delta, cj * delta * delta);
      }
    }
    return max_delta;
  };
  const auto trace_objective = [&](double lam) {
    if (!opt.objective_trace) return;
    double pen = 0.0;
    for (Index j = 0; j < p; ++j) pen += pf[j] * std::abs(beta[j]);
    opt.objective_trace->push_back(0.5 * rtil.squaredNorm() + lam * pen);
  };

  // Null model: fit unpenalized columns first, then read off lambda_max.
  std::vector<int> free_cols;
  for (Index j = 0; j < p; ++j)
    if (is_in(j) && pf[j] == 0.0) free_cols.push_back(static_cast<int>(j));
  if (!free_cols.empty()) {
    for (int s = 0; s < opt.max_sweeps; ++s)
      if (sweep(free_cols, 0.0) < thresh) break;
  }
  VectorXd grad = z.transpose() * rtil;
  const double null_rss = rtil.squaredNorm();

  if (fixed_grid.size() > 0) {
    core.grid = fixed_grid;
  } else {
    double lambda_max = 0.0;
    for (Index j = 0; j < p; ++j)
      if (is_in(j) && pf[j] > 0.0)
        lambda_max = std::max(lambda_max, std::abs(grad[j]) / pf[j]);
    if (lambda_max <= 1e-10) lambda_max = 1.0;  // target orthogonal to design
    double ratio = opt.lambda_min_ratio;
    if (ratio <= 0.0) ratio = n < p ? 1e-2 : 1e-4;  // usual wide/tall defaults
    core.grid = log_spaced_grid(lambda_max, opt.n_lambda, ratio);
  }

  const Index L = core.grid.size();
  core.beta.resize(L, p);
  const bool debug = std::getenv("RLEARN_LASSO_DEBUG") != nullptr;
  std::vector<char> in_cand(static_cast<size_t>(p), 0);
  double lam_prev = core.grid[0];
  double rsq_prev = 0.0;
  for (Index k = 0; k < L; ++k) {
    const double lam = core.grid[k];
    std::vector<int> cand;
    cand.reserve(64);
    std::fill(in_cand.begin(), in_cand.end(), 0);
    const double strong = 2.0 * lam - lam_prev;  // sequential strong rule
    for (Index j = 0; j < p; ++j) {
      if (!is_in(j)) continue;
      if (beta[j] != 0.0 || pf[j] == 0.0 || std::abs(grad[j]) >= pf[j] * strong) {
        cand.push_back(static_cast<int>(j));
        in_cand[static_cast<size_t>(j)] = 1;
      }
    }
    bool done = false;
    int sweeps_used = 0, rounds = 0;
    std::vector<int> active;
    for (int round = 0; !done && round < 100; ++round) {
      ++rounds;
      // Full candidate passes, iterating the active set to convergence in
      // between (the glmnet inner loop; full sweeps over a wide spline
      // design are ~100x the cost of an active-set pass).
      for (int s = 0; s < opt.max_sweeps; ++s) {
        ++sweeps_used;
        const double delta = sweep(cand, lam);
        trace_objective(lam);
        if (delta < thresh) break;
        active.clear();
        for (int j : cand)
          if (beta[j] != 0.0) active.push_back(j);
        std::minstd_rand perm_rng(
            static_cast<unsigned>(k * 131 + s + 1));
        for (int s2 = 0; s2 < opt.max_sweeps; ++s2) {
          std::shuffle(active.begin(), active.end(), perm_rng);
          if (sweep(active, lam) < thresh) break;
          trace_objective(lam);
        }
      }
      done = true;  // KKT scan over the complement only
      for (Index j = 0; j < p; ++j) {
        if (!is_in(j) || in_cand[static_cast<size_t>(j)] || pf[j] == 0.0) continue;
        if (std::abs(z.col(j).dot(rtil)) > lam * pf[j] + kKktSlack) {
          cand.push_back(static_cast<int>(j));
          in_cand[static_cast<size_t>(j)] = 1;
          done = false;
        }
      }
    }
    grad.noalias() = z.transpose() * rtil;  // feeds the next strong rule
    core.beta.row(k) = beta.transpose();
    if (debug)
      std::fprintf(stderr,
                   "lam[%3d]=%.3e cand=%d nonzero=%d sweeps=%d rounds=%d rsq=%.8f\n",
                   static_cast<int>(k), lam, static_cast<int>(cand.size()),
                   static_cast<int>((beta.array() != 0.0).count()), sweeps_used,
                   rounds, 1.0 - rtil.squaredNorm() / null_rss);
    lam_prev = lam;

    // Early path exit once the fit saturates (standard glmnet-style rules);
    // later grid points reuse the final coefficients.
    const double rsq = 1.0 - rtil.squaredNorm() / null_rss;
    const bool saturated = rsq > 0.999;
    const bool stalled = k > 0 && (rsq - rsq_prev) < 1e-5 * rsq;
    rsq_prev = rsq;
    if ((saturated || stalled) && k + 1 < L) {
      for (Index kk = k + 1; kk < L; ++kk) core.beta.row(kk) = beta.transpose();
      break;
    }
  }
  return core;
}

// ---------------------------------------------------------------------------
// Logistic core (IRLS around the same coordinate loop; unweighted rows)

CorePath logistic_core(const Eigen::Ref<const MatrixXd>& features,
                       const VectorXd& target, const LassoOptions& opt,
                       const VectorXd& fixed_grid) {
  const Index n = features.rows();
  const Index p = features.cols();
  if (n < 1 || p < 1) throw std::invalid_argument("logistic lasso: empty design");
  if (target.size() != n)
    throw std::invalid_argument("logistic lasso: target length mismatch");
  double ysum = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (target[i] != 0.0 && target[i] != 1.0)
      throw std::invalid_argument("logistic lasso: target must be 0/1");
    ysum += target[i];
  }

  const VectorXd v = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  CorePath core;
  core.std_info = standardize_columns(features, v, opt.standardize);

  if (ysum == 0.0 || ysum == static_cast<double>(n)) {
    // Single-class target: intercept-only at the clipped empirical rate.
    const double pbar = std::min(std::max(ysum / n, 1e-5), 1.0 - 1e-5);
    core.degenerate = true;
    core.grid = fixed_grid.size() > 0
                    ? fixed_grid
                    : log_spaced_grid(1.0, opt.n_lambda, opt.lambda_min_ratio);
    core.beta = MatrixXd::Zero(core.grid.size(), p);
    core.intercept = VectorXd::Constant(core.grid.size(),
                                        std::log(pbar / (1.0 - pbar)));
    return core;
  }

  MatrixXd z(n, p);
  for (Index j = 0; j < p; ++j) {
    if (!core.std_info.included[static_cast<size_t>(j)]) {
      z.col(j).setZero();
      continue;
    }
    z.col(j) = (features.col(j).array() - core.std_info.mean[j]).matrix() /
               core.std_info.scale[j];
  }
  const VectorXd pf = resolve_penalty_factor(opt, p);

  const double pbar = ysum / static_cast<double>(n);
  double b0 = std::log(pbar / (1.0 - pbar));
  VectorXd beta = VectorXd::Zero(p);
  VectorXd eta = VectorXd::Constant(n, b0);
  VectorXd prob(n), hess(n), q(n);
  const double inv_n = 1.0 / static_cast<double>(n);

  const auto is_in = [&](Index j) {
    return core.std_info.included[static_cast<size_t>(j)] != 0;
  };
  const auto refresh_irls = [&]() {
    for (Index i = 0; i < n; ++i) {
      const double e = std::min(std::max(eta[i], -30.0), 30.0);
      double pi = sigmoid(e);
      pi = std::min(std::max(pi, 1e-5), 1.0 - 1e-5);
      prob[i] = pi;
      hess[i] = pi * (1.0 - pi);
      q[i] = target[i] - pi;  // = hess * (working response - eta)
    }
  };

  VectorXd curvature(p);
  const auto refresh_curvature = [&](const std::vector<int>& idx) {
    for (int j : idx)
      curvature[j] = inv_n * z.col(j).cwiseProduct(z.col(j)).dot(hess);
  };

  // Inner coordinate loop on the current quadratic majorization; returns the
  // largest curvature-scaled squared change, as in the gaussian sweep.
  const auto cd_pass = [&](const std::vector<int>& idx, double lam) {
    double max_delta = 0.0;
    const double hsum = hess.sum();
    const double d0 = q.sum() / hsum;
    if (d0 != 0.0) {
      b0 += d0;
      eta.array() += d0;
      q.noalias() -= d0 * hess;
      max_delta = hsum * inv_n * d0 * d0;
    }
    for (int j : idx) {
      const double cj = curvature[j];
      if (cj <= 1e-24) continue;
      const double g = inv_n * z.col(j).dot(q) + cj * beta[j];
      const double bnew = soft_threshold(g, lam * pf[j]) / cj;
      const double delta = bnew - beta[j];
      if (delta != 0.0) {
        beta[j] = bnew;
        eta.noalias() += delta * z.col(j);
        q.noalias() -= delta * hess.cwiseProduct(z.col(j));
        max_delta = std::max(max_delta, cj * delta * delta);
      }
    }
    return max_delta;
  };

  // Full IRLS solve at one lambda over the candidate set.
  std::vector<int> active;
  const auto irls_solve = [&](const std::vector<int>& idx, double lam) {
    for (int outer = 0; outer < 25; ++outer) {
      refresh_irls();
      refresh_curvature(idx);
      double outer_delta = 0.0;
      for (int s = 0; s < opt.max_sweeps; ++s) {
        const double delta = cd_pass(idx, lam);
        outer_delta = std::max(outer_delta, delta);
        if (delta < opt.tol) break;
        active.clear();
        for (int j : idx)
          if (beta[j] != 0.0) active.push_back(j);
        for (int s2 = 0; s2 < opt.max_sweeps; ++s2)
          if (cd_pass(active, lam) < opt.tol) break;
      }
      if (outer_delta < opt.tol) break;
    }
    refresh_irls();  // leave q consistent for KKT checks
  };

  std::vector<int> free_cols;
  for (Index j = 0; j < p; ++j)
    if (is_in(j) && pf[j] == 0.0) free_cols.push_back(static_cast<int>(j));
  refresh_irls();
  if (!free_cols.empty()) irls_solve(free_cols, 0.0);
  VectorXd grad = inv_n * (z.transpose() * q);

  const auto mean_deviance = [&]() {
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double pr = std::min(std::max(prob[i], 1e-10), 1.0 - 1e-10);
      acc += -2.0 * (target[i] * std::log(pr) + (1.0 - target[i]) * std::log1p(-pr));
    }
    return acc * inv_n;
  };
  const double null_dev = mean_deviance();

  if (fixed_grid.size() > 0) {
    core.grid = fixed_grid;
  } else {
    double lambda_max = 0.0;
    for (Index j = 0; j < p; ++j)
      if (is_in(j) && pf[j] > 0.0)
        lambda_max = std::max(lambda_max, std::abs(grad[j]) / pf[j]);
    if (lambda_max <= 1e-10) lambda_max = 1.0;
    double ratio = opt.lambda_min_ratio;
    if (ratio <= 0.0) ratio = n < p ? 1e-2 : 1e-4;
    core.grid = log_spaced_grid(lambda_max, opt.n_lambda, ratio);
  }

  const Index L = core.grid.size();
  core.beta.resize(L, p);
  core.intercept.resize(L);
  std::vector<char> in_cand(static_cast<size_t>(p), 0);
  double lam_prev = core.grid[0];
  double dr_prev = 0.0;
  for (Index k = 0; k < L; ++k) {
    const double lam = core.grid[k];
    std::vector<int> cand;
    cand.reserve(64);
    std::fill(in_cand.begin(), in_cand.end(), 0);
    const double strong = 2.0 * lam - lam_prev;
    for (Index j = 0; j < p; ++j) {
      if (!is_in(j)) continue;
      if (beta[j] != 0.0 || pf[j] == 0.0 || std::abs(grad[j]) >= pf[j] * strong) {
        cand.push_back(static_cast<int>(j));
        in_cand[static_cast<size_t>(j)] = 1;
      }
    }
    bool done = false;
    for (int round = 0; !done && round < 100; ++round) {
      irls_solve(cand, lam);
      done = true;
      for (Index j = 0; j < p; ++j) {
        if (!is_in(j) || in_cand[static_cast<size_t>(j)] || pf[j] == 0.0) continue;
        if (std::abs(inv_n * z.col(j).dot(q)) > lam * pf[j] + kKktSlack) {
          cand.push_back(static_cast<int>(j));
          in_cand[static_cast<size_t>(j)] = 1;
          done = false;
        }
      }
    }
    grad.noalias() = inv_n * (z.transpose() * q);
    core.beta.row(k) = beta.transpose();
    core.intercept[k] = b0;
    lam_prev = lam;

    const double dr = 1.0 - mean_deviance() / null_dev;
    const bool saturated = dr > 0.999;
    const bool stalled = k > 0 && (dr - dr_prev) < 1e-5 * dr;
    dr_prev = dr;
    if ((saturated || stalled) && k + 1 < L) {
      for (Index kk = k + 1; kk < L; ++kk) {
        core.beta.row(kk) = beta.transpose();
        core.intercept[kk] = b0;
      }
      break;
    }
  }
  return core;
}

// ---------------------------------------------------------------------------
// Cross-validation scaffolding shared by both families

struct FoldLoss {
  VectorXd mean;   // per-lambda mean loss within the fold
  double weight;   // fold aggregation weight
};

void finish_cv(LinearPath* path, const std::vector<FoldLoss>& folds) {
  const Index L = path->lambda_grid.size();
  const Index K = static_cast<Index>(folds.size());
  if (K < 2) {  // CV disabled: default to the least-penalized fit
    path->cv_mean = VectorXd::Zero(0);
    path->cv_se = VectorXd::Zero(0);
    path->index_min = L - 1;
    path->index_1se = L - 1;
    path->lambda_min = path->lambda_grid[path->index_min];
    path->lambda_1se = path->lambda_grid[path->index_1se];
    return;
  }
  double wtot = 0.0;
  for (const auto& f : folds) wtot += f.weight;
  path->cv_mean = VectorXd::Zero(L);
  path->cv_se = VectorXd::Zero(L);
  for (Index k = 0; k < L; ++k) {
    double m = 0.0;
    for (const auto& f : folds) m += (f.weight / wtot) * f.mean[k];
    double var = 0.0;
    for (const auto& f : folds) {
      const double d = f.mean[k] - m;
      var += (f.weight / wtot) * d * d;
    }
    path->cv_mean[k] = m;
    path->cv_se[k] = std::sqrt(var / static_cast<double>(K - 1));
  }
  Index best = 0;
  for (Index k = 1; k < L; ++k)
    if (path->cv_mean[k] < path->cv_mean[best]) best = k;  // ties -> larger lambda
  path->index_min = best;
  const double cutoff = path->cv_mean[best] + path->cv_se[best];
  Index one_se = best;
  for (Index k = 0; k <= best; ++k) {
    if (path->cv_mean[k] <= cutoff) {
      one_se = k;
      break;
    }
  }
  path->index_1se = one_se;
  path->lambda_min = path->lambda_grid[best];
  path->lambda_1se = path->lambda_grid[one_se];
}

MatrixXd take_rows(const Eigen::Ref<const MatrixXd>& x, const std::vector<int>& rows) {
  MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

VectorXd take_rows(const VectorXd& x, const std::vector<int>& rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = x[rows[i]];
  return out;
}

}  // namespace

std::vector<int> balanced_folds(Index n, int k, Rng rng) {
  if (n < 1) throw std::invalid_argument("balanced_folds: n must be positive");
  if (k < 1) throw std::invalid_argument("balanced_folds: k must be positive");
  std::vector<Index> perm(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
  rng.shuffle(perm);
  std::vector<int> fold_of(static_cast<size_t>(n), 0);
  const Index base = n / k;
  const Index rem = n % k;
  Index pos = 0;
  for (int f = 0; f < k; ++f) {
    const Index size = base + (static_cast<Index>(f) < rem ? 1 : 0);
    for (Index c = 0; c < size; ++c) fold_of[static_cast<size_t>(perm[static_cast<size_t>(pos++)])] = f;
  }
  return fold_of;
}

VectorXd LinearPath::predict(const Eigen::Ref<const MatrixXd>& features,
                             Index grid_index) const {
  if (grid_index < 0 || grid_index >= lambda_grid.size())
    throw std::out_of_range("LinearPath::predict: grid index out of range");
  if (features.cols() != coefficients.cols())
    throw std::invalid_argument("LinearPath::predict: feature-count mismatch");
  VectorXd out = features * coefficients.row(grid_index).transpose();
  out.array() += intercepts[grid_index];
  if (logistic)
    for (Index i = 0; i < out.size(); ++i) out[i] = sigmoid(out[i]);
  return out;
}

LinearPath lasso_path_fit(const Eigen::Ref<const MatrixXd>& features,
                          const VectorXd& target, const VectorXd& weights,
                          const LassoOptions& options, Rng rng) {
  const VectorXd no_grid;
  CorePath full = gaussian_core(features, target, weights, options,
                                options.lambda_grid_override);
  LinearPath path;
  path.lambda_grid = full.grid;
  path.degenerate = full.degenerate;
  path.logistic = false;
  back_transform(full, &path.coefficients, &path.intercepts, /*gaussian=*/true);

  std::vector<FoldLoss> folds;
  const Index n = features.rows();
  const int k = std::min<Index>(options.cv_folds, n) > 1
                    ? static_cast<int>(std::min<Index>(options.cv_folds, n))
                    : 0;
  if (k >= 2 && !full.degenerate) {
    const std::vector<int> fold_of = balanced_folds(n, k, rng.derive(Stream::folds));
    LassoOptions fold_opt = options;
    fold_opt.objective_trace = nullptr;
    fold_opt.lambda_grid_override = full.grid;  // shared grid across folds
    for (int f = 0; f < k; ++f) {
      std::vector<int> tr, he;
      for (Index i = 0; i < n; ++i)
        (fold_of[static_cast<size_t>(i)] == f ? he : tr).push_back(static_cast<int>(i));
      if (he.empty() || tr.empty()) continue;
      const MatrixXd ftr = take_rows(features, tr);
      const VectorXd ytr = take_rows(target, tr);
      const VectorXd wtr = take_rows(weights, tr);
      CorePath cf = gaussian_core(ftr, ytr, wtr, fold_opt, full.grid);
      MatrixXd coef;
      VectorXd b0;
      back_transform(cf, &coef, &b0, /*gaussian=*/true);
      const MatrixXd fhe = take_rows(features, he);
      const VectorXd yhe = take_rows(target, he);
      const VectorXd whe = take_rows(weights, he);
      MatrixXd pred = fhe * coef.transpose();  // rows: held obs, cols: lambdas
      pred.rowwise() += b0.transpose();
      FoldLoss fl;
      fl.weight = whe.sum();
      fl.mean = VectorXd::Zero(full.grid.size());
      if (fl.weight > 0.0) {
        for (Index kk = 0; kk < full.grid.size(); ++kk) {
          double acc = 0.0;
          for (Index i = 0; i < fhe.rows(); ++i) {
            const double d = yhe[i] - pred(i, kk);
            acc += whe[i] * d * d;
          }
          fl.mean[kk] = acc / fl.weight;
        }
        folds.push_back(std::move(fl));
      }
    }
  }
  finish_cv(&path, folds);
  return path;
}

LinearPath logistic_lasso_path_fit(const Eigen::Ref<const MatrixXd>& features,
                                   const VectorXd& target,
                                   const LassoOptions& options, Rng rng) {
  // Reject single-class targets outright; the intercept-only fallback in
  // logistic_core exists only for interior CV training splits.
  const double tsum = target.sum();
  if (target.size() > 0 &&
      (tsum == 0.0 || tsum == static_cast<double>(target.size())))
    throw std::invalid_argument("logistic lasso: target has a single class");
  CorePath full = logistic_core(features, target, options,
                                options.lambda_grid_override);
  LinearPath path;
  path.lambda_grid = full.grid;
  path.degenerate = full.degenerate;
  path.logistic = true;
  back_transform(full, &path.coefficients, &path.intercepts, /*gaussian=*/false);

  std::vector<FoldLoss> folds;
  const Index n = features.rows();
  const int k = std::min<Index>(options.cv_folds, n) > 1
                    ? static_cast<int>(std::min<Index>(options.cv_folds, n))
                    : 0;
  if (k >= 2 && !full.degenerate) {
    const std::vector<int> fold_of = balanced_folds(n, k, rng.derive(Stream::folds));
    LassoOptions fold_opt = options;
    fold_opt.objective_trace = nullptr;
    fold_opt.lambda_grid_override = full.grid;
    for (int f = 0; f < k; ++f) {
      std::vector<int> tr, he;
      for (Index i = 0; i < n; ++i)
        (fold_of[static_cast<size_t>(i)] == f ? he : tr).push_back(static_cast<int>(i));
      if (he.empty() || tr.empty()) continue;
      const MatrixXd ftr = take_rows(features, tr);
      const VectorXd ytr = take_rows(target, tr);
      const double trsum = ytr.sum();
      FoldLoss fl;
      fl.weight = static_cast<double>(he.size());
      fl.mean = VectorXd::Zero(full.grid.size());
      if (trsum == 0.0 || trsum == static_cast<double>(ytr.size())) {
        // Degenerate training split: score its constant-rate prediction.
        const double pr = std::min(std::max(trsum / ytr.size(), 1e-10), 1.0 - 1e-10);
        const VectorXd yhe = take_rows(target, he);
        double acc = 0.0;
        for (Index i = 0; i < yhe.size(); ++i)
          acc += -2.0 * (yhe[i] * std::log(pr) + (1.0 - yhe[i]) * std::log1p(-pr));
        fl.mean.setConstant(acc / static_cast<double>(he.size()));
      } else {
        CorePath cf = logistic_core(ftr, ytr, fold_opt, full.grid);
        MatrixXd coef;
        VectorXd b0;
        back_transform(cf, &coef, &b0, /*gaussian=*/false);
        const MatrixXd fhe = take_rows(features, he);
        const VectorXd yhe = take_rows(target, he);
        MatrixXd pred = fhe * coef.transpose();
        pred.rowwise() += b0.transpose();
        for (Index kk = 0; kk < full.grid.size(); ++kk) {
          double acc = 0.0;
          for (Index i = 0; i < fhe.rows(); ++i) {
            double pr = sigmoid(pred(i, kk));
            pr = std::min(std::max(pr, 1e-10), 1.0 - 1e-10);
            acc += -2.0 * (yhe[i] * std::log(pr) + (1.0 - yhe[i]) * std::log1p(-pr));
          }
          fl.mean[kk] = acc / static_cast<double>(he.size());
        }
      }
      folds.push_back(std::move(fl));
    }
  }
  finish_cv(&path, folds);
  return path;
}

}  // namespace rlearn
