#pragma once

// Synthetic data generators: four benchmark setups (A: hard nuisances / easy
// effect on Unif(0,1)^d; B: randomized trial; C: easy propensity / hard
// baseline; D: unrelated arms), a randomized-trial DGP with smooth or
// discontinuous effects used for stacking demos, and the label-flip spiker
// that plants an exact treatment effect into binary outcomes.

#include "rlearn/data.hpp"
#include "rlearn/rng.hpp"

#include <functional>
#include <string>

namespace rlearn {

enum class Setup { A, B, C, D };

std::string setup_name(Setup setup);
Setup setup_from_name(const std::string& name);

// max(eta, min(x, 1 - eta)). Requires 0 <= eta <= 0.5.
double trim(double x, double eta);

struct SetupSpec {
  Setup setup = Setup::A;
  Index n = 500;
  Index d = 6;
  double sigma = 0.5;
  std::uint64_t seed = 0;
};

// Pointwise ground-truth functions of one setup, usable on any x.
struct SetupTruth {
  Setup setup = Setup::A;
  VectorXd tau(const Eigen::Ref<const MatrixXd>& x) const;
  VectorXd propensity(const Eigen::Ref<const MatrixXd>& x) const;
  VectorXd baseline(const Eigen::Ref<const MatrixXd>& x) const;
  // m*(x) = b*(x) + (e*(x) - 0.5) tau*(x)
  VectorXd conditional_mean(const Eigen::Ref<const MatrixXd>& x) const;
};

SetupTruth setup_truth(Setup setup);

// Draws X, W | X ~ Bernoulli(e*(X)), Y = b* + (W - 0.5) tau* + sigma * eps,
// and fills GroundTruth. Throws invalid_argument if spec.d < 5 or sigma < 0.
Dataset generate_setup(const SetupSpec& spec, Rng rng);
Dataset generate_setup(const SetupSpec& spec);  // uses Rng(spec.seed)

enum class StackTau { smooth, discontinuous };

struct StackDgpSpec {
  StackTau tau_kind = StackTau::smooth;
  Index n = 500;
  double sigma = 0.5;
  std::uint64_t seed = 0;
  static constexpr Index d = 10;
};

// Randomized design: X ~ N(0, I_10), W ~ Bernoulli(1/2),
// Y = b*(X) + (W - 0.5) tau*(X) + sigma * eps with baseline
// b* = 3 / (1 + exp(x_2 - x_1)) and, writing s() for the sigmoid,
// tau* = s(x_1 - x_0) (smooth) or 1{x_0 > 0} s(x_1) (discontinuous).
Dataset generate_stack_dgp(const StackDgpSpec& spec, Rng rng);
Dataset generate_stack_dgp(const StackDgpSpec& spec);

struct SpikeResult {
  VectorXd y0;
  VectorXd y1;
  VectorXd y_observed;  // y0 or y1 per w
};

using TauFunction = std::function<VectorXd(const Eigen::Ref<const MatrixXd>&)>;

// Plants E[Y(1) - Y(0) | X = x] = tau(x) into binary outcomes by flipping a
// Bernoulli(|tau|) share of labels: unflipped rows keep y_base in both arms;
// flipped rows get (Y(0), Y(1)) = (0, 1) when tau > 0, (1, 0) when tau < 0.
// Requires binary y_base and |tau| <= 1 everywhere.
SpikeResult spike_treatment_effect(const VectorXd& y_base,
                                   const Eigen::Ref<const MatrixXd>& x,
                                   const TauFunction& tau, const VectorXd& w,
                                   Rng rng);

}  // namespace rlearn
