#include "doctest.h"

#include "rlearn/boost.hpp"
#include "rlearn/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace rlearn;

namespace {

BoostSearchOptions quick_options() {
  BoostSearchOptions opt;
  opt.search_budget = 4;
  opt.cv_folds = 3;
  opt.max_rounds = 60;
  return opt;
}

}  // namespace

TEST_SUITE("boost") {

TEST_CASE("constant target collapses to the constant") {
  Rng rng(41);
  const MatrixXd x = MatrixXd::NullaryExpr(50, 2, [&](Index, Index) { return rng.normal(); });
  const GbmModel model =
      boost_fit(x, VectorXd::Constant(50, 4.25), quick_options(), Rng(42));
  const VectorXd pred = model.predict(x);
  for (Index i = 0; i < 50; ++i)
    CHECK(pred[i] == doctest::Approx(4.25).epsilon(1e-9));
}

TEST_CASE("one-dimensional step function is learned") {
  Rng rng(43);
  MatrixXd x(200, 1);
  VectorXd y(200);
  for (Index i = 0; i < 200; ++i) {
    x(i, 0) = rng.uniform(-1.0, 1.0);
    y[i] = x(i, 0) > 0.0 ? 1.0 : 0.0;
  }
  const GbmModel model = boost_fit(x, y, quick_options(), Rng(44));
  const double train_mse = (model.predict(x) - y).squaredNorm() / 200.0;
  CHECK(train_mse < 0.01);
}

TEST_CASE("selected configuration has the best sampled cv loss") {
  Rng rng(45);
  const MatrixXd x = MatrixXd::NullaryExpr(120, 3, [&](Index, Index) { return rng.normal(); });
  const VectorXd y =
      x.col(0).array().sin() +
      VectorXd::NullaryExpr(120, [&](Index) { return 0.3 * rng.normal(); }).array();
  const GbmModel model = boost_fit(x, y, quick_options(), Rng(46));
  REQUIRE(!model.search_cv_losses().empty());
  for (double loss : model.search_cv_losses())
    CHECK(model.cv_loss() <= loss + 1e-12);
}

TEST_CASE("sampled parameters stay on the search grid") {
  Rng rng(47);
  const MatrixXd x = MatrixXd::NullaryExpr(60, 2, [&](Index, Index) { return rng.normal(); });
  const VectorXd y = x.col(0) + x.col(1);
  const GbmModel model = boost_fit(x, y, quick_options(), Rng(48));
  const BoostParams& p = model.params();
  CHECK((p.subsample == 0.5 || p.subsample == 0.75 || p.subsample == 1.0));
  CHECK((p.colsample == 0.6 || p.colsample == 0.8 || p.colsample == 1.0));
  CHECK(p.eta > 0.0);
  CHECK(p.max_depth >= 3);
  CHECK(p.max_depth <= 20);
  CHECK(p.gamma >= 0.0);
  CHECK(p.gamma <= 0.2);
  CHECK(p.min_child_weight >= 1);
  CHECK(p.min_child_weight <= 20);
  CHECK(p.n_rounds >= 0);
  CHECK(p.n_rounds <= 60);
}

TEST_CASE("deterministic given the seed") {
  Rng rng(49);
  const MatrixXd x = MatrixXd::NullaryExpr(80, 2, [&](Index, Index) { return rng.normal(); });
  const VectorXd y = x.col(0).cwiseProduct(x.col(1));
  const GbmModel a = boost_fit(x, y, quick_options(), Rng(50));
  const GbmModel b = boost_fit(x, y, quick_options(), Rng(50));
  CHECK(a.predict(x) == b.predict(x));
}

TEST_CASE("logistic loss emits probabilities") {
  Rng rng(51);
  MatrixXd x(100, 1);
  VectorXd y(100);
  for (Index i = 0; i < 100; ++i) {
    x(i, 0) = rng.normal();
    y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-2.0 * x(i, 0)))) ? 1.0 : 0.0;
  }
  BoostSearchOptions opt = quick_options();
  opt.loss = BoostLoss::logistic;
  const GbmModel model = boost_fit(x, y, opt, Rng(52));
  const VectorXd prob = model.predict(x);
  for (Index i = 0; i < 100; ++i) {
    CHECK(prob[i] > 0.0);
    CHECK(prob[i] < 1.0);
  }
}

TEST_CASE("fixed-configuration training honors the round count") {
  Rng rng(53);
  const MatrixXd x = MatrixXd::NullaryExpr(60, 2, [&](Index, Index) { return rng.normal(); });
  const VectorXd y = x.col(0);
  BoostParams params;
  params.eta = 0.1;
  params.max_depth = 3;
  params.n_rounds = 7;
  const GbmModel model = boost_train(x, y, params, Rng(54));
  CHECK(model.tree_count() == 7);
}

TEST_CASE("input validation") {
  Rng rng(55);
  const MatrixXd x = MatrixXd::NullaryExpr(12, 2, [&](Index, Index) { return rng.normal(); });
  const VectorXd y = x.col(0);
  BoostSearchOptions opt = quick_options();
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(boost_fit(x, VectorXd::Ones(5), opt, Rng(0)),
                    std::invalid_argument);
  }
  SUBCASE("too few rows for the cv folds") {
    opt.cv_folds = 10;  // needs n >= 20
    CHECK_THROWS_AS(boost_fit(x, y, opt, Rng(0)), std::invalid_argument);
  }
  SUBCASE("non-finite input") {
    MatrixXd bad = x;
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(boost_fit(bad, y, opt, Rng(0)), std::invalid_argument);
  }
  SUBCASE("logistic target must be binary") {
    opt.loss = BoostLoss::logistic;
    CHECK_THROWS_AS(boost_fit(x, 0.5 * VectorXd::Ones(12), opt, Rng(0)),
                    std::invalid_argument);
  }
}

}  // TEST_SUITE
