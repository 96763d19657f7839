#include "doctest.h"

#include "rlearn/kernel.hpp"
#include "rlearn/rng.hpp"

#include <cmath>

using namespace rlearn;

namespace {

struct Problem {
  MatrixXd x;
  VectorXd u;
  VectorXd w;
};

Problem random_problem(Index n, Index d, std::uint64_t seed) {
  Rng rng(seed);
  Problem p;
  p.x = MatrixXd::NullaryExpr(n, d, [&](Index, Index) { return rng.normal(); });
  p.u = VectorXd::NullaryExpr(n, [&](Index) { return rng.normal(); });
  p.w = VectorXd::NullaryExpr(n, [&](Index) { return rng.uniform(0.1, 1.0); });
  return p;
}

// (1/n) sum w (u - K a)^2 + ridge a'Ka
double objective(const MatrixXd& k, const VectorXd& u, const VectorXd& w,
                 double ridge, const VectorXd& alpha) {
  const VectorXd fit = k * alpha;
  const double n = static_cast<double>(u.size());
  return (w.array() * (u - fit).array().square()).sum() / n +
         ridge * alpha.dot(k * alpha);
}

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("rbf kernel hand values") {
  MatrixXd a(1, 2), b(1, 2);
  a << 0.0, 0.0;
  b << 3.0, 4.0;  // distance 5
  const MatrixXd k = rbf_kernel(a, b, 5.0);
  CHECK(k(0, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  const MatrixXd self = rbf_kernel(a, a, 2.0);
  CHECK(self(0, 0) == 1.0);
}

TEST_CASE("median pairwise bandwidth on three points") {
  MatrixXd x(3, 1);
  x << 0.0, 1.0, 3.0;  // pairwise distances 1, 2, 3
  CHECK(median_pairwise_bandwidth(x) == doctest::Approx(2.0));
}

TEST_CASE("scalar problem solves by hand") {
  MatrixXd x(1, 1);
  x << 0.0;
  VectorXd u(1), w(1);
  u << 2.0;
  w << 1.0;
  // K = 1, n = 1: (1*1 + 1*1) alpha = 2 -> alpha = 1, f(x0) = 1
  const KernelModel model = kernel_rlearner_fit(x, u, w, 1.0, 1.0, 0.0);
  CHECK(model.alpha[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(model.predict(x)[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("huge ridge shrinks the coefficients away") {
  const Problem p = random_problem(10, 2, 61);
  const KernelModel model = kernel_rlearner_fit(p.x, p.u, p.w, 1e6, 1.0, 0.0);
  CHECK(model.alpha.norm() <= 1e-3 * p.u.norm());
}

TEST_CASE("representer system is solved to tolerance") {
  const Problem p = random_problem(60, 3, 62);
  const double ridge = 0.05;
  const KernelModel model = kernel_rlearner_fit(p.x, p.u, p.w, ridge, 1.2, 0.0);
  const MatrixXd k = rbf_kernel(p.x, p.x, 1.2);
  const double n = static_cast<double>(p.x.rows());
  const VectorXd lhs =
      p.w.asDiagonal() * (k * model.alpha) + n * ridge * model.alpha;
  const VectorXd rhs = p.w.asDiagonal() * p.u;
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <
        1e-8 * rhs.lpNorm<Eigen::Infinity>());
}

TEST_CASE("objective gradient vanishes at the solution") {
  const Problem p = random_problem(40, 3, 63);
  const double ridge = 0.1, bandwidth = 1.5;
  const KernelModel model =
      kernel_rlearner_fit(p.x, p.u, p.w, ridge, bandwidth, 0.0);
  const MatrixXd k = rbf_kernel(p.x, p.x, bandwidth);
  const double at_solution = objective(k, p.u, p.w, ridge, model.alpha);
  Rng rng(64);
  for (int trial = 0; trial < 5; ++trial) {
    VectorXd dir = VectorXd::NullaryExpr(40, [&](Index) { return rng.normal(); });
    dir.normalize();
    const double h = 1e-6;
    const double up = objective(k, p.u, p.w, ridge, model.alpha + h * dir);
    const double down = objective(k, p.u, p.w, ridge, model.alpha - h * dir);
    const double slope = (up - down) / (2.0 * h);
    CHECK(std::abs(slope) <= 1e-6 * std::max(1.0, std::abs(at_solution)));
  }
}

TEST_CASE("prediction cap clamps and counts") {
  const Problem p = random_problem(30, 2, 65);
  const VectorXd u = 10.0 * p.u;
  const double cap = 0.05;  // far below the fitted values
  const KernelModel model = kernel_rlearner_fit(p.x, u, p.w, 1e-4, 1.0, cap);
  const VectorXd pred = model.predict(p.x);
  CHECK(pred.lpNorm<Eigen::Infinity>() <= cap + 1e-15);
  CHECK(model.clamp_activations > 0);
}

TEST_CASE("cv refit equals a direct fit at the selected ridge") {
  const Problem p = random_problem(50, 2, 66);
  const KernelCvResult cv = kernel_rlearner_cv(
      p.x, p.u, p.w, VectorXd(), 5, 1.0, 0.0, Rng(67));
  CHECK(cv.ridge_grid.size() == 20);
  CHECK(cv.cv_loss.size() == cv.ridge_grid.size());
  bool on_grid = false;
  for (Index i = 0; i < cv.ridge_grid.size(); ++i)
    on_grid = on_grid || cv.ridge_grid[i] == cv.ridge_selected;
  CHECK(on_grid);
  const KernelModel direct =
      kernel_rlearner_fit(p.x, p.u, p.w, cv.ridge_selected, 1.0, 0.0);
  CHECK((cv.model.alpha - direct.alpha).lpNorm<Eigen::Infinity>() < 1e-10);
}

}  // TEST_SUITE
