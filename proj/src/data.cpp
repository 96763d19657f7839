#include "rlearn/data.hpp"

#include <cmath>

namespace rlearn {

void Dataset::validate() const {
  if (x.rows() < 1 || x.cols() < 1) {
    throw std::invalid_argument("Dataset: need n >= 1 and d >= 1");
  }
  if (w.size() != x.rows() || y.size() != x.rows()) {
    throw std::invalid_argument("Dataset: x, w, y row counts differ");
  }
  for (Index i = 0; i < w.size(); ++i) {
    if (w[i] != 0.0 && w[i] != 1.0) {
      throw std::invalid_argument("Dataset: treatment entries must be 0 or 1");
    }
    if (!std::isfinite(y[i])) {
      throw std::invalid_argument("Dataset: outcome entries must be finite");
    }
  }
  if (truth) {
    const Index n = x.rows();
    if (truth->tau_star.size() != n || truth->e_star.size() != n ||
        truth->m_star.size() != n || truth->b_star.size() != n) {
      throw std::invalid_argument("Dataset: ground-truth vectors must have n rows");
    }
    for (Index i = 0; i < n; ++i) {
      if (!(truth->e_star[i] > 0.0 && truth->e_star[i] < 1.0)) {
        throw std::invalid_argument("Dataset: e_star must lie in (0,1)");
      }
    }
  }
}

std::string family_name(Family family) {
  switch (family) {
    case Family::lasso: return "lasso";
    case Family::boost: return "boost";
    case Family::kernel: return "kernel";
  }
  throw std::logic_error("family_name: unknown family");
}

Family family_from_name(const std::string& name) {
  if (name == "lasso") return Family::lasso;
  if (name == "boost") return Family::boost;
  if (name == "kernel") return Family::kernel;
  throw std::invalid_argument("unknown family: " + name);
}

namespace {

void check_lengths(Index n, const VectorXd& v, const char* what) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string("length mismatch: ") + what);
  }
}

}  // namespace

double r_loss(const VectorXd& tau_hat, const Dataset& data,
              const NuisanceEstimates& nuisance) {
  const Index n = data.n();
  check_lengths(n, tau_hat, "tau_hat");
  check_lengths(n, nuisance.m_hat, "m_hat");
  check_lengths(n, nuisance.e_hat, "e_hat");
  Ksum acc;
  for (Index i = 0; i < n; ++i) {
    const double resid = (data.y[i] - nuisance.m_hat[i]) -
                         (data.w[i] - nuisance.e_hat[i]) * tau_hat[i];
    acc.add(resid * resid);
  }
  return acc.value() / static_cast<double>(n);
}

RobinsonParts robinson_residualize(const Dataset& data,
                                   const NuisanceEstimates& nuisance) {
  const Index n = data.n();
  check_lengths(n, nuisance.m_hat, "m_hat");
  check_lengths(n, nuisance.e_hat, "e_hat");
  RobinsonParts parts;
  parts.pseudo_outcome.resize(n);
  parts.weight.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double gap = data.w[i] - nuisance.e_hat[i];
    if (gap == 0.0) {
      throw std::invalid_argument(
          "robinson_residualize: w - e_hat hit zero; propensity clipping missing");
    }
    parts.pseudo_outcome[i] = (data.y[i] - nuisance.m_hat[i]) / gap;
    parts.weight[i] = gap * gap;
  }
  return parts;
}

double mse(const VectorXd& pred, const VectorXd& truth) {
  check_lengths(pred.size(), truth, "truth");
  Ksum acc;
  for (Index i = 0; i < pred.size(); ++i) {
    const double diff = pred[i] - truth[i];
    acc.add(diff * diff);
  }
  return acc.value() / static_cast<double>(pred.size());
}

double empirical_regret(const VectorXd& tau_hat, const GroundTruth& truth) {
  check_lengths(tau_hat.size(), truth.tau_star, "tau_star");
  check_lengths(tau_hat.size(), truth.e_star, "e_star");
  Ksum acc;
  for (Index i = 0; i < tau_hat.size(); ++i) {
    const double diff = tau_hat[i] - truth.tau_star[i];
    acc.add(truth.e_star[i] * (1.0 - truth.e_star[i]) * diff * diff);
  }
  return acc.value() / static_cast<double>(tau_hat.size());
}

}  // namespace rlearn
