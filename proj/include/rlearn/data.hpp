#pragma once

// Core data model: observations, optional ground truth, out-of-fold nuisance
// predictions, the fitted-CATE interface, and the loss/metric definitions.

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlearn {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

// Neumaier compensated summation; keeps table aggregation stable.
class Ksum {
 public:
  void add(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      comp_ += (sum_ - t) + value;
    } else {
      comp_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct GroundTruth {
  VectorXd tau_star;
  VectorXd e_star;
  VectorXd m_star;
  VectorXd b_star;
};

struct Dataset {
  MatrixXd x;  // n rows, d columns
  VectorXd w;  // treatment indicator, each entry 0 or 1
  VectorXd y;
  std::optional<GroundTruth> truth;

  Index n() const { return x.rows(); }
  Index d() const { return x.cols(); }

  // Throws std::invalid_argument on shape/content violations.
  void validate() const;
};

// Per-observation held-out predictions m_hat[i] = m^(-q(i))(x_i) etc.
struct NuisanceEstimates {
  VectorXd m_hat;
  VectorXd e_hat;
  std::vector<int> fold_of;
};

enum class Family { lasso, boost, kernel };

std::string family_name(Family family);
Family family_from_name(const std::string& name);

// A fitted CATE predictor. predict is pure: same rows, same values.
class CateModel {
 public:
  virtual ~CateModel() = default;
  virtual VectorXd predict(const Eigen::Ref<const MatrixXd>& x) const = 0;

  const std::string& learner() const { return learner_; }
  Family family() const { return family_; }
  const std::map<std::string, double>& hyper() const { return hyper_; }

 protected:
  CateModel(std::string learner, Family family)
      : learner_(std::move(learner)), family_(family) {}
  std::map<std::string, double> hyper_;

 private:
  std::string learner_;
  Family family_;
};

using CateModelPtr = std::shared_ptr<const CateModel>;

// (1/n) sum_i ((y_i - m_hat_i) - (w_i - e_hat_i) tau_i)^2
double r_loss(const VectorXd& tau_hat, const Dataset& data,
              const NuisanceEstimates& nuisance);

// pseudo_i = (y_i - m_hat_i)/(w_i - e_hat_i), weight_i = (w_i - e_hat_i)^2.
// Weighted SSE of any tau against pseudo equals r_loss(tau) exactly.
struct RobinsonParts {
  VectorXd pseudo_outcome;
  VectorXd weight;
};
RobinsonParts robinson_residualize(const Dataset& data,
                                   const NuisanceEstimates& nuisance);

double mse(const VectorXd& pred, const VectorXd& truth);

// (1/n) sum_i e*_i (1 - e*_i) (tau_hat_i - tau*_i)^2: conditional expectation
// of the excess R-loss given the covariates (lower variance than sampling
// (w - e*)^2).
double empirical_regret(const VectorXd& tau_hat, const GroundTruth& truth);

}  // namespace rlearn
