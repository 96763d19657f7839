#include "doctest.h"

#include "rlearn/simulate.hpp"

#include <cmath>

using namespace rlearn;

namespace {

MatrixXd one_row(std::initializer_list<double> values) {
  MatrixXd x(1, static_cast<Index>(values.size()));
  Index j = 0;
  for (double v : values) x(0, j++) = v;
  return x;
}

double mean_of(const VectorXd& v) { return v.mean(); }

double sd_of(const VectorXd& v) {
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() /
                   static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("trim clamps into [eta, 1-eta]") {
  CHECK(trim(0.05, 0.1) == 0.1);
  CHECK(trim(0.5, 0.1) == 0.5);
  CHECK(trim(0.97, 0.1) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(trim(1.5, 0.0) == 1.0);
  CHECK(trim(-0.2, 0.0) == 0.0);
  CHECK_THROWS_AS(trim(0.5, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(trim(0.5, -0.1), std::invalid_argument);
}

TEST_CASE("setup names round-trip") {
  for (Setup s : {Setup::A, Setup::B, Setup::C, Setup::D})
    CHECK(setup_from_name(setup_name(s)) == s);
  CHECK_THROWS_AS(setup_from_name("Q"), std::invalid_argument);
}

TEST_CASE("ground-truth functions match hand-computed points") {
  SUBCASE("A at the cube center") {
    // b = sin(pi/4) + 2*(0)^2 + 0.5 + 0.25, e = trim_.1(sin(pi/4)),
    // tau = (0.5+0.5)/2, m = b + (e-1/2) tau.
    const SetupTruth t = setup_truth(Setup::A);
    const MatrixXd x = one_row({0.5, 0.5, 0.5, 0.5, 0.5});
    CHECK(t.baseline(x)[0] ==
          doctest::Approx(1.4571067811865476).epsilon(1e-12));
    CHECK(t.propensity(x)[0] ==
          doctest::Approx(0.7071067811865476).epsilon(1e-12));
    CHECK(t.tau(x)[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.conditional_mean(x)[0] ==
          doctest::Approx(1.5606601717798214).epsilon(1e-12));
  }
  SUBCASE("A effect at the all-ones corner") {
    const SetupTruth t = setup_truth(Setup::A);
    CHECK(t.tau(one_row({1, 1, 1, 1, 1}))[0] ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("B at a unit vector") {
    // tau = x0 + log(1 + exp(x1)) = 1 + log 2; b = max(1,0,0) + 0.
    const SetupTruth t = setup_truth(Setup::B);
    const MatrixXd x = one_row({1, 0, 0, 0, 0});
    CHECK(t.tau(x)[0] == doctest::Approx(1.6931471805599453).epsilon(1e-12));
    CHECK(t.baseline(x)[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.propensity(x)[0] == 0.5);
  }
  SUBCASE("C at the origin") {
    // e = 1/(1+exp(0)), b = 2 log(1 + exp(0)) = 2 log 2, tau = 1.
    const SetupTruth t = setup_truth(Setup::C);
    const MatrixXd x = one_row({0, 0, 0, 0, 0});
    CHECK(t.propensity(x)[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.baseline(x)[0] ==
          doctest::Approx(1.3862943611198906).epsilon(1e-12));
    CHECK(t.tau(x)[0] == 1.0);
  }
  SUBCASE("D at the all-ones point") {
    // e = 1/(1 + 2 e^{-1}); arms max(3,0)=3 and max(2,0)=2 give tau=1, b=2.5.
    const SetupTruth t = setup_truth(Setup::D);
    const MatrixXd x = one_row({1, 1, 1, 1, 1});
    CHECK(t.propensity(x)[0] ==
          doctest::Approx(0.5761168847658291).epsilon(1e-12));
    CHECK(t.tau(x)[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.baseline(x)[0] == doctest::Approx(2.5).epsilon(1e-12));
  }
}

TEST_CASE("generated datasets are structurally sound") {
  SetupSpec spec;
  spec.setup = Setup::A;
  spec.n = 400;
  spec.d = 6;
  spec.sigma = 0.5;
  const Dataset data = generate_setup(spec, Rng(51));
  CHECK(data.n() == 400);
  CHECK(data.d() == 6);
  REQUIRE(data.truth.has_value());
  data.validate();
  for (Index i = 0; i < data.n(); ++i) {
    CHECK((data.w[i] == 0.0 || data.w[i] == 1.0));
    // A draws covariates on the unit cube and trims e* into [0.1, 0.9].
    CHECK(data.x.row(i).minCoeff() >= 0.0);
    CHECK(data.x.row(i).maxCoeff() <= 1.0);
    CHECK(data.truth->e_star[i] >= 0.1);
    CHECK(data.truth->e_star[i] <= 0.9);
    // m* = b* + (e* - 1/2) tau*.
    CHECK(data.truth->m_star[i] ==
          doctest::Approx(data.truth->b_star[i] +
                          (data.truth->e_star[i] - 0.5) *
                              data.truth->tau_star[i])
              .epsilon(1e-14));
  }
}

TEST_CASE("zero noise makes outcomes exactly structural") {
  SetupSpec spec;
  spec.setup = Setup::D;
  spec.n = 300;
  spec.d = 5;
  spec.sigma = 0.0;
  const Dataset data = generate_setup(spec, Rng(52));
  for (Index i = 0; i < data.n(); ++i) {
    const double expected = data.truth->b_star[i] +
                            (data.w[i] - 0.5) * data.truth->tau_star[i];
    CHECK(data.y[i] == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("setup C has a unit effect and setup B a fair coin") {
  SetupSpec spec;
  spec.setup = Setup::C;
  spec.n = 200;
  spec.d = 5;
  const Dataset c = generate_setup(spec, Rng(53));
  for (Index i = 0; i < c.n(); ++i) CHECK(c.truth->tau_star[i] == 1.0);

  spec.setup = Setup::B;
  spec.n = 100000;
  const Dataset b = generate_setup(spec, Rng(54));
  for (Index i = 0; i < 100; ++i) CHECK(b.truth->e_star[i] == 0.5);
  CHECK(mean_of(b.w) == doctest::Approx(0.5).epsilon(0.02));
  // Gaussian covariates, not the unit cube.
  CHECK(b.x.minCoeff() < -1.0);
  CHECK(b.x.maxCoeff() > 1.0);
}

TEST_CASE("propensities stay inside the open interval") {
  for (Setup s : {Setup::C, Setup::D}) {
    SetupSpec spec;
    spec.setup = s;
    spec.n = 5000;
    spec.d = 5;
    const Dataset data = generate_setup(spec, Rng(55));
    CHECK(data.truth->e_star.minCoeff() > 0.0);
    CHECK(data.truth->e_star.maxCoeff() < 1.0);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  SetupSpec spec;
  spec.setup = Setup::B;
  spec.n = 50;
  spec.d = 5;
  spec.seed = 99;
  const Dataset a = generate_setup(spec);
  const Dataset b = generate_setup(spec, Rng(99));
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.w == b.w);
  spec.seed = 100;
  const Dataset c = generate_setup(spec);
  CHECK(a.y != c.y);
}

TEST_CASE("generator rejects bad dimensions and noise") {
  SetupSpec spec;
  spec.d = 4;
  CHECK_THROWS_AS(generate_setup(spec, Rng(0)), std::invalid_argument);
  spec.d = 6;
  spec.sigma = -0.5;
  CHECK_THROWS_AS(generate_setup(spec, Rng(0)), std::invalid_argument);
}

TEST_CASE("randomized-trial DGP matches its closed forms") {
  StackDgpSpec spec;
  spec.n = 2000;
  spec.sigma = 1.0;
  SUBCASE("smooth effect is a sigmoid in the first two covariates") {
    spec.tau_kind = StackTau::smooth;
    const Dataset data = generate_stack_dgp(spec, Rng(56));
    CHECK(data.d() == 10);
    for (Index i = 0; i < data.n(); ++i) {
      const double expected =
          1.0 / (1.0 + std::exp(-(data.x(i, 1) - data.x(i, 0))));
      CHECK(data.truth->tau_star[i] ==
            doctest::Approx(expected).epsilon(1e-12));
      CHECK(data.truth->e_star[i] == 0.5);
      const double base = 3.0 / (1.0 + std::exp(data.x(i, 2) - data.x(i, 1)));
      CHECK(data.truth->b_star[i] == doctest::Approx(base).epsilon(1e-12));
    }
  }
  SUBCASE("discontinuous effect gates on the first covariate") {
    spec.tau_kind = StackTau::discontinuous;
    const Dataset data = generate_stack_dgp(spec, Rng(57));
    for (Index i = 0; i < data.n(); ++i) {
      const double gate = data.x(i, 0) > 0.0 ? 1.0 : 0.0;
      const double expected =
          gate / (1.0 + std::exp(-data.x(i, 1)));
      CHECK(data.truth->tau_star[i] ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("randomized-trial effects have the expected moments") {
  // Monte Carlo reference values: smooth tau has mean 1/2 and spread ~0.2616
  // by symmetry of x1 - x0; the gated variant averages ~0.2501 (half the
  // rows are off, the rest average ~0.5) with spread ~0.2902.
  StackDgpSpec spec;
  spec.n = 100000;
  spec.tau_kind = StackTau::smooth;
  const Dataset smooth = generate_stack_dgp(spec, Rng(58));
  CHECK(mean_of(smooth.truth->tau_star) == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sd_of(smooth.truth->tau_star) ==
        doctest::Approx(0.261569).epsilon(0.02));

  spec.tau_kind = StackTau::discontinuous;
  const Dataset disc = generate_stack_dgp(spec, Rng(59));
  CHECK(mean_of(disc.truth->tau_star) ==
        doctest::Approx(0.250088).epsilon(0.02));
  CHECK(sd_of(disc.truth->tau_star) ==
        doctest::Approx(0.290158).epsilon(0.02));
}

TEST_CASE("planted binary effects behave exactly at the extremes") {
  Rng gen(60);
  const Index n = 500;
  MatrixXd x =
      MatrixXd::NullaryExpr(n, 3, [&](Index, Index) { return gen.normal(); });
  VectorXd y_base = VectorXd::NullaryExpr(
      n, [&](Index) { return gen.bernoulli(0.5) ? 1.0 : 0.0; });
  VectorXd w = VectorXd::NullaryExpr(
      n, [&](Index) { return gen.bernoulli(0.5) ? 1.0 : 0.0; });

  SUBCASE("zero effect changes nothing") {
    const TauFunction zero = [](const Eigen::Ref<const MatrixXd>& pts) {
      return VectorXd::Zero(pts.rows()).eval();
    };
    const SpikeResult r = spike_treatment_effect(y_base, x, zero, w, Rng(61));
    CHECK(r.y0 == y_base);
    CHECK(r.y1 == y_base);
    CHECK(r.y_observed == y_base);
  }
  SUBCASE("unit effect flips every row upward") {
    const TauFunction one = [](const Eigen::Ref<const MatrixXd>& pts) {
      return VectorXd::Ones(pts.rows()).eval();
    };
    const SpikeResult r = spike_treatment_effect(y_base, x, one, w, Rng(62));
    for (Index i = 0; i < n; ++i) {
      CHECK(r.y0[i] == 0.0);
      CHECK(r.y1[i] == 1.0);
    }
  }
  SUBCASE("unit negative effect flips every row downward") {
    const TauFunction neg = [](const Eigen::Ref<const MatrixXd>& pts) {
      return (-VectorXd::Ones(pts.rows())).eval();
    };
    const SpikeResult r = spike_treatment_effect(y_base, x, neg, w, Rng(63));
    for (Index i = 0; i < n; ++i) {
      CHECK(r.y0[i] == 1.0);
      CHECK(r.y1[i] == 0.0);
    }
  }
  SUBCASE("observed outcome follows the assigned arm") {
    const TauFunction half = [](const Eigen::Ref<const MatrixXd>& pts) {
      return VectorXd::Constant(pts.rows(), 0.5).eval();
    };
    const SpikeResult r = spike_treatment_effect(y_base, x, half, w, Rng(64));
    for (Index i = 0; i < n; ++i) {
      CHECK(r.y_observed[i] == (w[i] == 1.0 ? r.y1[i] : r.y0[i]));
      CHECK(r.y1[i] >= r.y0[i]);  // positive effect never flips downward
    }
  }
}

TEST_CASE("planted effect level is recovered in the mean") {
  Rng gen(65);
  const Index n = 200000;
  MatrixXd x(n, 1);
  for (Index i = 0; i < n; ++i) x(i, 0) = gen.normal();
  VectorXd y_base = VectorXd::NullaryExpr(
      n, [&](Index) { return gen.bernoulli(0.5) ? 1.0 : 0.0; });
  VectorXd w = VectorXd::NullaryExpr(
      n, [&](Index) { return gen.bernoulli(0.5) ? 1.0 : 0.0; });
  const TauFunction level = [](const Eigen::Ref<const MatrixXd>& pts) {
    return VectorXd::Constant(pts.rows(), 0.3).eval();
  };
  const SpikeResult r = spike_treatment_effect(y_base, x, level, w, Rng(66));
  CHECK(mean_of(r.y1 - r.y0) == doctest::Approx(0.3).epsilon(0.017));
}

TEST_CASE("planted effects reject invalid inputs") {
  Rng gen(67);
  MatrixXd x(10, 2);
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 2; ++j) x(i, j) = gen.normal();
  VectorXd y_base = VectorXd::Zero(10);
  VectorXd w = VectorXd::Ones(10);
  const TauFunction big = [](const Eigen::Ref<const MatrixXd>& pts) {
    return VectorXd::Constant(pts.rows(), 1.5).eval();
  };
  CHECK_THROWS_AS(spike_treatment_effect(y_base, x, big, w, Rng(68)),
                  std::invalid_argument);

  const TauFunction fine = [](const Eigen::Ref<const MatrixXd>& pts) {
    return VectorXd::Constant(pts.rows(), 0.2).eval();
  };
  VectorXd bad_y = y_base;
  bad_y[0] = 0.5;
  CHECK_THROWS_AS(spike_treatment_effect(bad_y, x, fine, w, Rng(68)),
                  std::invalid_argument);
  VectorXd bad_w = w;
  bad_w[0] = 2.0;
  CHECK_THROWS_AS(spike_treatment_effect(y_base, x, fine, bad_w, Rng(68)),
                  std::invalid_argument);
}

TEST_CASE("observed outcomes are centered on the conditional mean") {
  // In every decile of the first covariate, Y - m*(X) and W - e*(X) should
  // both average to zero within Monte Carlo error.
  SetupSpec spec;
  spec.setup = Setup::A;
  spec.n = 100000;
  spec.d = 5;
  spec.sigma = 1.0;
  const Dataset data = generate_setup(spec, Rng(69));
  const VectorXd z = data.y - data.truth->m_star;
  const VectorXd u = data.w - data.truth->e_star;

  for (int bin = 0; bin < 10; ++bin) {
    const double lo = bin / 10.0;
    const double hi = (bin + 1) / 10.0;
    Ksum sum_z, sum_z2, sum_u, sum_u2;
    Index count = 0;
    for (Index i = 0; i < data.n(); ++i) {
      const double v = data.x(i, 0);
      if (v < lo || (v >= hi && bin < 9)) continue;
      sum_z.add(z[i]);
      sum_z2.add(z[i] * z[i]);
      sum_u.add(u[i]);
      sum_u2.add(u[i] * u[i]);
      ++count;
    }
    REQUIRE(count > 1000);
    const double nd = static_cast<double>(count);
    const double mz = sum_z.value() / nd;
    const double sz = std::sqrt(sum_z2.value() / nd - mz * mz);
    CHECK(std::abs(mz) < 4.0 * sz / std::sqrt(nd));
    const double mu = sum_u.value() / nd;
    const double su = std::sqrt(sum_u2.value() / nd - mu * mu);
    CHECK(std::abs(mu) < 4.0 * su / std::sqrt(nd));
  }
}

}  // TEST_SUITE
