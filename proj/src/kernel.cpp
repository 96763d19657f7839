#include "rlearn/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#ifdef RLEARN_HAVE_LAPACKE
#include <lapacke.h>
#endif

#include "rlearn/lasso.hpp"  // balanced_folds

namespace rlearn {

namespace {

// Symmetric eigendecomposition, in place: a becomes the eigenvector matrix,
// ascending eigenvalues in evals.
void eig_sym(MatrixXd* a, VectorXd* evals) {
  const Index n = a->rows();
  evals->resize(n);
#ifdef RLEARN_HAVE_LAPACKE
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L',
                                         static_cast<lapack_int>(n), a->data(),
                                         static_cast<lapack_int>(n), evals->data());
  if (info != 0) throw std::runtime_error("kernel solve: eigendecomposition failed");
#else
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(*a);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("kernel solve: eigendecomposition failed");
  *evals = es.eigenvalues();
  *a = es.eigenvectors();
#endif
}

// Solve (S + shift I) gamma = b from the eigendecomposition S = V L V'.
VectorXd eig_solve(const MatrixXd& v, const VectorXd& evals, const VectorXd& b,
                   double shift) {
  VectorXd proj = v.transpose() * b;
  for (Index i = 0; i < proj.size(); ++i) proj[i] /= evals[i] + shift;
  return v * proj;
}

VectorXd default_ridge_grid() {
  const int count = 20;
  VectorXd grid(count);
  const double hi = std::log(1e2), lo = std::log(1e-6);
  for (int k = 0; k < count; ++k)
    grid[k] = std::exp(hi + (lo - hi) * static_cast<double>(k) / (count - 1));
  return grid;  // descending
}

void check_kernel_inputs(const Eigen::Ref<const MatrixXd>& x, const VectorXd& u,
                         const VectorXd& w, double ridge, double bandwidth) {
  const Index n = x.rows();
  if (n < 1) throw std::invalid_argument("kernel fit: empty input");
  if (u.size() != n || w.size() != n)
    throw std::invalid_argument("kernel fit: length mismatch");
  if (!x.allFinite() || !u.allFinite())
    throw std::invalid_argument("kernel fit: non-finite input");
  for (Index i = 0; i < n; ++i)
    if (!std::isfinite(w[i]) || w[i] <= 0.0)
      throw std::invalid_argument("kernel fit: weights must be positive");
  if (ridge <= 0.0) throw std::invalid_argument("kernel fit: ridge must be positive");
  if (bandwidth <= 0.0)
    throw std::invalid_argument("kernel fit: bandwidth must be positive");
}

}  // namespace

MatrixXd rbf_kernel(const Eigen::Ref<const MatrixXd>& a,
                    const Eigen::Ref<const MatrixXd>& b, double bandwidth) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("rbf_kernel: dimension mismatch");
  const VectorXd an = a.rowwise().squaredNorm();
  const VectorXd bn = b.rowwise().squaredNorm();
  MatrixXd k = -2.0 * (a * b.transpose());
  k.colwise() += an;
  k.rowwise() += bn.transpose();
  const double scale = -0.5 / (bandwidth * bandwidth);
  return (k.array().max(0.0) * scale).exp().matrix();
}

double median_pairwise_bandwidth(const Eigen::Ref<const MatrixXd>& x) {
  const Index n = x.rows();
  if (n < 2) return 1.0;
  const Index stride = std::max<Index>(1, n / 1024);
  std::vector<Index> rows;
  for (Index i = 0; i < n; i += stride) rows.push_back(i);
  std::vector<double> dists;
  dists.reserve(rows.size() * (rows.size() - 1) / 2);
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = i + 1; j < rows.size(); ++j)
      dists.push_back((x.row(rows[i]) - x.row(rows[j])).norm());
  if (dists.empty()) return 1.0;
  const size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<long>(mid), dists.end());
  const double med = dists[mid];
  return med > 0.0 ? med : 1.0;
}

VectorXd KernelModel::predict(const Eigen::Ref<const MatrixXd>& x) const {
  VectorXd out = rbf_kernel(x, anchors, bandwidth) * alpha;
  if (cap > 0.0) {
    for (Index i = 0; i < out.size(); ++i) {
      if (out[i] > cap) {
        out[i] = cap;
        ++clamp_activations;
      } else if (out[i] < -cap) {
        out[i] = -cap;
        ++clamp_activations;
      }
    }
  }
  return out;
}

KernelModel kernel_rlearner_fit(const Eigen::Ref<const MatrixXd>& x,
                                const VectorXd& pseudo_outcome,
                                const VectorXd& weight, double ridge,
                                double bandwidth, double cap) {
  check_kernel_inputs(x, pseudo_outcome, weight, ridge, bandwidth);
  const Index n = x.rows();
  const VectorXd sqw = weight.cwiseSqrt();
  MatrixXd k = rbf_kernel(x, x, bandwidth);
  // Symmetrize: with a = sqrt(D) g, (DK + n ridge I) a = D u becomes
  // (sqrt(D) K sqrt(D) + n ridge I) g = sqrt(D) u.
  MatrixXd s = sqw.asDiagonal() * k * sqw.asDiagonal();
  VectorXd evals;
  MatrixXd v = s;
  eig_sym(&v, &evals);
  const VectorXd b = sqw.cwiseProduct(pseudo_outcome);
  const double shift = static_cast<double>(n) * ridge;

  KernelModel model;
  model.anchors = x;
  model.bandwidth = bandwidth;
  model.ridge = ridge;
  model.cap = cap;
  model.alpha = sqw.cwiseProduct(eig_solve(v, evals, b, shift));

  // Residual check on the original (unsymmetrized) system, with one jittered
  // retry before declaring the solve numerically unusable.
  const VectorXd du = weight.cwiseProduct(pseudo_outcome);
  const double target_norm = du.lpNorm<Eigen::Infinity>();
  const auto residual = [&](const VectorXd& alpha) {
    return (weight.cwiseProduct(k * alpha) + shift * alpha - du)
        .lpNorm<Eigen::Infinity>();
  };
  const double tol = 1e-8 * std::max(target_norm, 1e-300);
  if (residual(model.alpha) >= tol) {
    model.alpha = sqw.cwiseProduct(eig_solve(v, evals, b, shift + 1e-10));
    if (residual(model.alpha) >= tol)
      throw std::runtime_error("kernel solve: residual beyond tolerance");
  }
  return model;
}

KernelCvResult kernel_rlearner_cv(const Eigen::Ref<const MatrixXd>& x,
                                  const VectorXd& pseudo_outcome,
                                  const VectorXd& weight,
                                  const VectorXd& ridge_grid, int cv_folds,
                                  double bandwidth, double cap, Rng rng) {
  VectorXd grid = ridge_grid.size() > 0 ? ridge_grid : default_ridge_grid();
  std::sort(grid.data(), grid.data() + grid.size(), std::greater<double>());
  check_kernel_inputs(x, pseudo_outcome, weight, grid[grid.size() - 1], bandwidth);
  const Index n = x.rows();
  if (cv_folds < 2 || cv_folds > n)
    throw std::invalid_argument("kernel cv: invalid fold count");

  const std::vector<int> fold_of = balanced_folds(n, cv_folds, rng.derive(Stream::folds));
  VectorXd loss = VectorXd::Zero(grid.size());
  VectorXd loss_weight = VectorXd::Zero(grid.size());
  for (int f = 0; f < cv_folds; ++f) {
    std::vector<int> tr, va;
    for (Index i = 0; i < n; ++i)
      (fold_of[static_cast<size_t>(i)] == f ? va : tr).push_back(static_cast<int>(i));
    if (tr.empty() || va.empty()) continue;
    MatrixXd xtr(static_cast<Index>(tr.size()), x.cols());
    MatrixXd xva(static_cast<Index>(va.size()), x.cols());
    VectorXd utr(static_cast<Index>(tr.size())), wtr(static_cast<Index>(tr.size()));
    VectorXd uva(static_cast<Index>(va.size())), wva(static_cast<Index>(va.size()));
    for (size_t i = 0; i < tr.size(); ++i) {
      xtr.row(static_cast<Index>(i)) = x.row(tr[i]);
      utr[static_cast<Index>(i)] = pseudo_outcome[tr[i]];
      wtr[static_cast<Index>(i)] = weight[tr[i]];
    }
    for (size_t i = 0; i < va.size(); ++i) {
      xva.row(static_cast<Index>(i)) = x.row(va[i]);
      uva[static_cast<Index>(i)] = pseudo_outcome[va[i]];
      wva[static_cast<Index>(i)] = weight[va[i]];
    }
    const VectorXd sqw = wtr.cwiseSqrt();
    MatrixXd ktr = rbf_kernel(xtr, xtr, bandwidth);
    MatrixXd v = sqw.asDiagonal() * ktr * sqw.asDiagonal();
    VectorXd evals;
    eig_sym(&v, &evals);  // one factorization reused across the whole grid
    const VectorXd b = sqw.cwiseProduct(utr);
    const MatrixXd kva = rbf_kernel(xva, xtr, bandwidth);
    const double wsum = wva.sum();
    for (Index r = 0; r < grid.size(); ++r) {
      const double shift = static_cast<double>(xtr.rows()) * grid[r];
      VectorXd alpha = sqw.cwiseProduct(eig_solve(v, evals, b, shift));
      VectorXd pred = kva * alpha;
      if (cap > 0.0)
        pred = pred.cwiseMax(-cap).cwiseMin(cap);
      double acc = 0.0;
      for (Index i = 0; i < pred.size(); ++i) {
        const double dd = uva[i] - pred[i];
        acc += wva[i] * dd * dd;
      }
      loss[r] += acc;
      loss_weight[r] += wsum;
    }
  }
  for (Index r = 0; r < grid.size(); ++r)
    if (loss_weight[r] > 0.0) loss[r] /= loss_weight[r];

  Index best = 0;  // grid descending: ties keep the larger ridge
  for (Index r = 1; r < grid.size(); ++r)
    if (loss[r] < loss[best]) best = r;

  KernelCvResult result;
  result.ridge_grid = grid;
  result.cv_loss = loss;
  result.ridge_selected = grid[best];
  result.model =
      kernel_rlearner_fit(x, pseudo_outcome, weight, grid[best], bandwidth, cap);
  return result;
}

}  // namespace rlearn
