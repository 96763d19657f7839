#include "rlearn/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace rlearn {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct TruthRow {
  double b = 0.0;
  double e = 0.0;
  double tau = 0.0;
};

TruthRow truth_row(Setup setup, const Eigen::Ref<const MatrixXd>& x, Index i) {
  TruthRow t;
  switch (setup) {
    case Setup::A: {
      const double x0 = x(i, 0), x1 = x(i, 1), x2 = x(i, 2);
      t.b = std::sin(kPi * x0 * x1) + 2.0 * (x2 - 0.5) * (x2 - 0.5) +
            x(i, 3) + 0.5 * x(i, 4);
      t.e = trim(std::sin(kPi * x0 * x1), 0.1);
      t.tau = 0.5 * (x0 + x1);
      break;
    }
    case Setup::B: {
      t.b = std::max({x(i, 0) + x(i, 1), x(i, 2), 0.0}) +
            std::max(x(i, 3) + x(i, 4), 0.0);
      t.e = 0.5;
      t.tau = x(i, 0) + std::log1p(std::exp(x(i, 1)));
      break;
    }
    case Setup::C: {
      t.b = 2.0 * std::log1p(std::exp(x(i, 0) + x(i, 1) + x(i, 2)));
      t.e = 1.0 / (1.0 + std::exp(x(i, 1) + x(i, 2)));
      t.tau = 1.0;
      break;
    }
    case Setup::D: {
      const double a = std::max(x(i, 0) + x(i, 1) + x(i, 2), 0.0);
      const double c = std::max(x(i, 3) + x(i, 4), 0.0);
      t.b = 0.5 * (a + c);
      t.e = 1.0 / (1.0 + std::exp(-x(i, 0)) + std::exp(-x(i, 1)));
      t.tau = a - c;
      break;
    }
  }
  return t;
}

void check_spec(Index n, Index d, double sigma) {
  if (n < 1) throw std::invalid_argument("generate_setup: n must be positive");
  if (d < 5)
    throw std::invalid_argument(
        "generate_setup: setups reference the first five features, need d >= 5");
  if (!(sigma >= 0.0))
    throw std::invalid_argument("generate_setup: sigma must be >= 0");
}

}  // namespace

std::string setup_name(Setup setup) {
  switch (setup) {
    case Setup::A: return "A";
    case Setup::B: return "B";
    case Setup::C: return "C";
    case Setup::D: return "D";
  }
  throw std::invalid_argument("setup_name: unknown setup");
}

Setup setup_from_name(const std::string& name) {
  if (name == "A" || name == "a") return Setup::A;
  if (name == "B" || name == "b") return Setup::B;
  if (name == "C" || name == "c") return Setup::C;
  if (name == "D" || name == "d") return Setup::D;
  throw std::invalid_argument("unknown setup name: " + name);
}

double trim(double x, double eta) {
  if (eta < 0.0 || eta > 0.5)
    throw std::invalid_argument("trim: eta must lie in [0, 0.5]");
  return std::max(eta, std::min(x, 1.0 - eta));
}

VectorXd SetupTruth::tau(const Eigen::Ref<const MatrixXd>& x) const {
  VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out[i] = truth_row(setup, x, i).tau;
  return out;
}

VectorXd SetupTruth::propensity(const Eigen::Ref<const MatrixXd>& x) const {
  VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out[i] = truth_row(setup, x, i).e;
  return out;
}

VectorXd SetupTruth::baseline(const Eigen::Ref<const MatrixXd>& x) const {
  VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out[i] = truth_row(setup, x, i).b;
  return out;
}

VectorXd SetupTruth::conditional_mean(
    const Eigen::Ref<const MatrixXd>& x) const {
  VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const TruthRow t = truth_row(setup, x, i);
    out[i] = t.b + (t.e - 0.5) * t.tau;
  }
  return out;
}

SetupTruth setup_truth(Setup setup) { return SetupTruth{setup}; }

Dataset generate_setup(const SetupSpec& spec, Rng rng) {
  check_spec(spec.n, spec.d, spec.sigma);
  const Index n = spec.n;
  const Index d = spec.d;
  Dataset data;
  data.x.resize(n, d);
  const bool uniform = spec.setup == Setup::A;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j)
      data.x(i, j) = uniform ? rng.uniform01() : rng.normal();

  GroundTruth truth;
  truth.b_star.resize(n);
  truth.e_star.resize(n);
  truth.tau_star.resize(n);
  truth.m_star.resize(n);
  data.w.resize(n);
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const TruthRow t = truth_row(spec.setup, data.x, i);
    truth.b_star[i] = t.b;
    truth.e_star[i] = t.e;
    truth.tau_star[i] = t.tau;
    truth.m_star[i] = t.b + (t.e - 0.5) * t.tau;
    data.w[i] = rng.bernoulli(t.e) ? 1.0 : 0.0;
  }
  for (Index i = 0; i < n; ++i) {
    data.y[i] = truth.b_star[i] + (data.w[i] - 0.5) * truth.tau_star[i] +
                spec.sigma * rng.normal();
  }
  data.truth = std::move(truth);
  return data;
}

Dataset generate_setup(const SetupSpec& spec) {
  return generate_setup(spec, Rng(spec.seed));
}

Dataset generate_stack_dgp(const StackDgpSpec& spec, Rng rng) {
  if (spec.n < 1)
    throw std::invalid_argument("generate_stack_dgp: n must be positive");
  if (!(spec.sigma >= 0.0))
    throw std::invalid_argument("generate_stack_dgp: sigma must be >= 0");
  const Index n = spec.n;
  const Index d = StackDgpSpec::d;
  Dataset data;
  data.x.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) data.x(i, j) = rng.normal();

  GroundTruth truth;
  truth.b_star.resize(n);
  truth.e_star = VectorXd::Constant(n, 0.5);
  truth.tau_star.resize(n);
  data.w.resize(n);
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    truth.b_star[i] = 3.0 * sigmoid(data.x(i, 1) - data.x(i, 2));
    truth.tau_star[i] =
        spec.tau_kind == StackTau::smooth
            ? sigmoid(data.x(i, 1) - data.x(i, 0))
            : (data.x(i, 0) > 0.0 ? sigmoid(data.x(i, 1)) : 0.0);
    data.w[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  truth.m_star = truth.b_star;  // e* = 1/2 cancels the treatment term
  for (Index i = 0; i < n; ++i) {
    data.y[i] = truth.b_star[i] + (data.w[i] - 0.5) * truth.tau_star[i] +
                spec.sigma * rng.normal();
  }
  data.truth = std::move(truth);
  return data;
}

Dataset generate_stack_dgp(const StackDgpSpec& spec) {
  return generate_stack_dgp(spec, Rng(spec.seed));
}

SpikeResult spike_treatment_effect(const VectorXd& y_base,
                                   const Eigen::Ref<const MatrixXd>& x,
                                   const TauFunction& tau, const VectorXd& w,
                                   Rng rng) {
  const Index n = y_base.size();
  if (x.rows() != n || w.size() != n)
    throw std::invalid_argument("spike_treatment_effect: length mismatch");
  for (Index i = 0; i < n; ++i) {
    if (y_base[i] != 0.0 && y_base[i] != 1.0)
      throw std::invalid_argument("spike_treatment_effect: y_base must be 0/1");
    if (w[i] != 0.0 && w[i] != 1.0)
      throw std::invalid_argument("spike_treatment_effect: w must be 0/1");
  }
  const VectorXd t = tau(x);
  if (t.size() != n)
    throw std::invalid_argument("spike_treatment_effect: tau length mismatch");
  for (Index i = 0; i < n; ++i)
    if (!(std::abs(t[i]) <= 1.0))
      throw std::invalid_argument("spike_treatment_effect: |tau| must be <= 1");

  SpikeResult out;
  out.y0.resize(n);
  out.y1.resize(n);
  out.y_observed.resize(n);
  for (Index i = 0; i < n; ++i) {
    const bool flip = rng.bernoulli(std::abs(t[i]));
    if (!flip) {
      out.y0[i] = y_base[i];
      out.y1[i] = y_base[i];
    } else if (t[i] > 0.0) {
      out.y0[i] = 0.0;
      out.y1[i] = 1.0;
    } else {
      out.y0[i] = 1.0;
      out.y1[i] = 0.0;
    }
    out.y_observed[i] = w[i] == 1.0 ? out.y1[i] : out.y0[i];
  }
  return out;
}

}  // namespace rlearn
