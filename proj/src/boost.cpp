#include "rlearn/boost.hpp"

#include "rlearn/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace rlearn {

namespace {

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

constexpr double kGainEps = 1e-12;

// Per-node worklist: row order sorted by each sampled feature, maintained by
// stable partitioning on the way down (no re-sorting inside the tree).
struct NodeWork {
  std::vector<std::vector<int>> order;
  double g_sum = 0.0;
  double h_sum = 0.0;
  int depth = 0;
  int node = 0;
};

struct TreeGrower {
  const Eigen::Ref<const MatrixXd>& x;
  const VectorXd& g;
  const VectorXd& h;
  const BoostParams& par;
  const std::vector<int>& feats;  // sampled feature ids, ascending
  std::vector<char>& left_flag;   // scratch, length n, zeroed between uses

  double leaf_value(double gs, double hs) const {
    double w = -gs / (hs + 1.0);
    if (par.max_delta_step > 0) {
      const double cap = static_cast<double>(par.max_delta_step);
      w = std::min(std::max(w, -cap), cap);
    }
    return par.eta * w;
  }

  BoostTree grow(std::vector<std::vector<int>> root_order, double gs, double hs) {
    BoostTree tree;
    tree.nodes.push_back(BoostTreeNode{});
    std::vector<NodeWork> stack;
    stack.push_back(NodeWork{std::move(root_order), gs, hs, 0, 0});
    while (!stack.empty()) {
      NodeWork w = std::move(stack.back());
      stack.pop_back();
      BoostTreeNode& node = tree.nodes[static_cast<size_t>(w.node)];
      const size_t m = w.order.empty() ? 0 : w.order[0].size();
      if (w.depth >= par.max_depth || m < 2) {
        node.value = leaf_value(w.g_sum, w.h_sum);
        continue;
      }
      // Exact greedy split search; ties go to the first candidate found
      // (features ascending, thresholds ascending) via the strict margin.
      double best_gain = 0.0;
      int best_f = -1;
      double best_thr = 0.0;
      const double parent = w.g_sum * w.g_sum / (w.h_sum + 1.0);
      const double mcw = static_cast<double>(par.min_child_weight);
      for (size_t fi = 0; fi < feats.size(); ++fi) {
        const std::vector<int>& ord = w.order[fi];
        const int feat = feats[fi];
        double gl = 0.0, hl = 0.0;
        for (size_t i = 0; i + 1 < ord.size(); ++i) {
          const int row = ord[i];
          gl += g[row];
          hl += h[row];
          const double vcur = x(row, feat);
          const double vnext = x(ord[i + 1], feat);
          if (vcur == vnext) continue;  // not a boundary between distinct values
          if (hl < mcw) continue;
          const double hr = w.h_sum - hl;
          if (hr < mcw) break;  // prefix hessians only grow; no later candidate fits
          const double gr = w.g_sum - gl;
          const double gain = 0.5 * (gl * gl / (hl + 1.0) + gr * gr / (hr + 1.0) -
                                     parent) -
                              par.gamma;
          if (gain > best_gain + kGainEps) {
            best_gain = gain;
            best_f = static_cast<int>(fi);
            best_thr = 0.5 * (vcur + vnext);
          }
        }
      }
      if (best_f < 0 || best_gain <= kGainEps) {
        node.value = leaf_value(w.g_sum, w.h_sum);
        continue;
      }
      // Partition every feature order by the chosen split, stably.
      NodeWork left, right;
      left.depth = right.depth = w.depth + 1;
      left.order.resize(feats.size());
      right.order.resize(feats.size());
      const int split_feat = feats[static_cast<size_t>(best_f)];
      for (const int row : w.order[static_cast<size_t>(best_f)]) {
        if (x(row, split_feat) <= best_thr) {
          left_flag[static_cast<size_t>(row)] = 1;
          left.g_sum += g[row];
          left.h_sum += h[row];
        }
      }
      right.g_sum = w.g_sum - left.g_sum;
      right.h_sum = w.h_sum - left.h_sum;
      for (size_t fi = 0; fi < feats.size(); ++fi) {
        for (const int row : w.order[fi]) {
          (left_flag[static_cast<size_t>(row)] ? left.order[fi] : right.order[fi])
              .push_back(row);
        }
      }
      for (const int row : w.order[static_cast<size_t>(best_f)])
        left_flag[static_cast<size_t>(row)] = 0;

      node.feature = split_feat;
      node.threshold = best_thr;
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      left.node = node.left;
      right.node = node.right;
      tree.nodes.push_back(BoostTreeNode{});
      tree.nodes.push_back(BoostTreeNode{});
      stack.push_back(std::move(right));
      stack.push_back(std::move(left));
    }
    return tree;
  }
};

struct LossState {
  BoostLoss loss;
  const VectorXd& y;
  const VectorXd& w;  // always populated (ones when unweighted)

  double base_score(const std::vector<int>& rows) const {
    double sw = 0.0, sy = 0.0;
    for (const int i : rows) {
      sw += w[i];
      sy += w[i] * y[i];
    }
    const double mean = sw > 0.0 ? sy / sw : 0.0;
    if (loss == BoostLoss::squared) return mean;
    const double p = std::min(std::max(mean, 1e-5), 1.0 - 1e-5);
    return std::log(p / (1.0 - p));
  }

  void fill_grad(const std::vector<int>& rows, const VectorXd& score,
                 VectorXd* g, VectorXd* h) const {
    for (const int i : rows) {
      if (loss == BoostLoss::squared) {
        (*g)[i] = w[i] * (score[i] - y[i]);
        (*h)[i] = w[i];
      } else {
        const double p = sigmoid(score[i]);
        (*g)[i] = w[i] * (p - y[i]);
        (*h)[i] = w[i] * p * (1.0 - p);
      }
    }
  }

  double eval(const std::vector<int>& rows, const VectorXd& score) const {
    double sw = 0.0, acc = 0.0;
    for (const int i : rows) {
      sw += w[i];
      if (loss == BoostLoss::squared) {
        const double d = y[i] - score[i];
        acc += w[i] * d * d;
      } else {
        double p = sigmoid(score[i]);
        p = std::min(std::max(p, 1e-10), 1.0 - 1e-10);
        acc += w[i] * -2.0 * (y[i] * std::log(p) + (1.0 - y[i]) * std::log1p(-p));
      }
    }
    return sw > 0.0 ? acc / sw : 0.0;
  }
};

BoostParams sample_params(Rng* rng, BoostLoss loss) {
  static const double kSubsample[] = {0.5, 0.75, 1.0};
  static const double kColsample[] = {0.6, 0.8, 1.0};
  static const double kEta[] = {5e-3, 1e-2, 1.5e-2, 2.5e-2, 5e-2, 8e-2, 1e-1, 2e-1};
  BoostParams par;
  par.loss = loss;
  par.subsample = kSubsample[rng->uniform_int(3)];
  par.colsample = kColsample[rng->uniform_int(3)];
  par.eta = kEta[rng->uniform_int(8)];
  par.max_depth = 3 + static_cast<int>(rng->uniform_int(18));        // 3..20
  par.gamma = rng->uniform(0.0, 0.2);
  par.min_child_weight = 1 + static_cast<int>(rng->uniform_int(20)); // 1..20
  par.max_delta_step = 1 + static_cast<int>(rng->uniform_int(10));   // 1..10
  return par;
}

std::vector<int> sample_features(Index d, double colsample, Rng* rng) {
  const int keep = std::max(1, static_cast<int>(std::ceil(colsample * d)));
  std::vector<int> all(static_cast<size_t>(d));
  for (Index j = 0; j < d; ++j) all[static_cast<size_t>(j)] = static_cast<int>(j);
  for (int i = 0; i < keep; ++i) {  // partial Fisher-Yates
    const auto pick = i + static_cast<int>(rng->uniform_int(static_cast<uint64_t>(d - i)));
    std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(pick)]);
  }
  all.resize(static_cast<size_t>(keep));
  std::sort(all.begin(), all.end());
  return all;
}

// One boosting round on the given training rows; returns the grown tree and
// adds its predictions to the running scores of `update_rows`.
BoostTree boost_round(const Eigen::Ref<const MatrixXd>& x,
                      const std::vector<std::vector<int>>& presort,
                      const std::vector<char>& in_train, const LossState& ls,
                      const BoostParams& par, const VectorXd& score, Rng rng,
                      VectorXd* g, VectorXd* h, std::vector<char>* scratch) {
  const Index n = x.rows();
  std::vector<char> in_tree(static_cast<size_t>(n), 0);
  std::vector<int> rows;
  rows.reserve(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    if (!in_train[static_cast<size_t>(i)]) continue;
    if (par.subsample >= 1.0 || rng.bernoulli(par.subsample)) {
      in_tree[static_cast<size_t>(i)] = 1;
      rows.push_back(static_cast<int>(i));
    }
  }
  const std::vector<int> feats = sample_features(x.cols(), par.colsample, &rng);
  if (rows.empty()) return BoostTree{{BoostTreeNode{}}};  // single zero leaf
  ls.fill_grad(rows, score, g, h);
  double gs = 0.0, hs = 0.0;
  for (const int i : rows) {
    gs += (*g)[i];
    hs += (*h)[i];
  }
  std::vector<std::vector<int>> root(feats.size());
  for (size_t fi = 0; fi < feats.size(); ++fi) {
    root[fi].reserve(rows.size());
    for (const int row : presort[static_cast<size_t>(feats[fi])])
      if (in_tree[static_cast<size_t>(row)]) root[fi].push_back(row);
  }
  TreeGrower grower{x, *g, *h, par, feats, *scratch};
  return grower.grow(std::move(root), gs, hs);
}

}  // namespace

double BoostTree::predict_row(const Eigen::Ref<const MatrixXd>& x, Index row) const {
  int cur = 0;
  while (nodes[static_cast<size_t>(cur)].feature >= 0) {
    const BoostTreeNode& nd = nodes[static_cast<size_t>(cur)];
    cur = x(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<size_t>(cur)].value;
}

VectorXd GbmModel::predict_score(const Eigen::Ref<const MatrixXd>& x) const {
  VectorXd out = VectorXd::Constant(x.rows(), f0_);
  for (const BoostTree& tree : trees_)
    for (Index i = 0; i < x.rows(); ++i) out[i] += tree.predict_row(x, i);
  return out;
}

VectorXd GbmModel::predict(const Eigen::Ref<const MatrixXd>& x) const {
  VectorXd out = predict_score(x);
  if (params_.loss == BoostLoss::logistic)
    for (Index i = 0; i < out.size(); ++i) out[i] = sigmoid(out[i]);
  return out;
}

GbmModel boost_fit(const Eigen::Ref<const MatrixXd>& x, const VectorXd& y,
                   const BoostSearchOptions& options, Rng rng,
                   const VectorXd& weights) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < 1 || d < 1) throw std::invalid_argument("boost_fit: empty input");
  if (y.size() != n) throw std::invalid_argument("boost_fit: target length mismatch");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("boost_fit: non-finite input");
  if (options.cv_folds < 2 || n < 2 * options.cv_folds)
    throw std::invalid_argument("boost_fit: need n >= 2*cv_folds");
  VectorXd w = weights;
  if (w.size() == 0) w = VectorXd::Ones(n);
  if (w.size() != n) throw std::invalid_argument("boost_fit: weights length mismatch");
  for (Index i = 0; i < n; ++i)
    if (!std::isfinite(w[i]) || w[i] < 0.0)
      throw std::invalid_argument("boost_fit: weights must be finite and >= 0");
  if (options.loss == BoostLoss::logistic)
    for (Index i = 0; i < n; ++i)
      if (y[i] != 0.0 && y[i] != 1.0)
        throw std::invalid_argument("boost_fit: logistic target must be 0/1");

  std::vector<std::vector<int>> presort(static_cast<size_t>(d));
  for (Index j = 0; j < d; ++j) {
    std::vector<int>& ord = presort[static_cast<size_t>(j)];
    ord.resize(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) ord[static_cast<size_t>(i)] = static_cast<int>(i);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](int a, int b) { return x(a, j) < x(b, j); });
  }

  const LossState ls{options.loss, y, w};
  const std::vector<int> fold_of =
      balanced_folds(n, options.cv_folds, rng.derive(Stream::folds));

  Rng cfg_rng = rng.derive(Stream::search);
  std::vector<BoostParams> configs;
  for (int c = 0; c < options.search_budget; ++c)
    configs.push_back(sample_params(&cfg_rng, options.loss));

  // Lockstep CV: every fold advances one round at a time so the mean
  // validation loss drives a shared early-stopping decision.
  struct FoldState {
    std::vector<int> train, val;
    std::vector<char> in_train;
    VectorXd score;
  };
  std::vector<double> config_loss(static_cast<size_t>(options.search_budget));
  std::vector<int> config_round(static_cast<size_t>(options.search_budget));
  VectorXd g(n), h(n);
  std::vector<char> scratch(static_cast<size_t>(n), 0);

  for (int c = 0; c < options.search_budget; ++c) {
    const BoostParams& par = configs[static_cast<size_t>(c)];
    std::vector<FoldState> folds(static_cast<size_t>(options.cv_folds));
    for (int f = 0; f < options.cv_folds; ++f) {
      FoldState& fs = folds[static_cast<size_t>(f)];
      fs.in_train.assign(static_cast<size_t>(n), 0);
      for (Index i = 0; i < n; ++i) {
        if (fold_of[static_cast<size_t>(i)] == f) {
          fs.val.push_back(static_cast<int>(i));
        } else {
          fs.train.push_back(static_cast<int>(i));
          fs.in_train[static_cast<size_t>(i)] = 1;
        }
      }
      fs.score = VectorXd::Constant(n, ls.base_score(fs.train));
    }
    double best = 0.0;
    int best_round = 0, stall = 0;
    for (int f = 0; f < options.cv_folds; ++f)
      best += ls.eval(folds[static_cast<size_t>(f)].val,
                      folds[static_cast<size_t>(f)].score);
    best /= options.cv_folds;  // round 0: constant model
    for (int r = 1; r <= options.max_rounds; ++r) {
      double mean_loss = 0.0;
      for (int f = 0; f < options.cv_folds; ++f) {
        FoldState& fs = folds[static_cast<size_t>(f)];
        const BoostTree tree =
            boost_round(x, presort, fs.in_train, ls, par, fs.score,
                        rng.derive(Stream::search, c, f, r), &g, &h, &scratch);
        for (Index i = 0; i < n; ++i) fs.score[i] += tree.predict_row(x, i);
        mean_loss += ls.eval(fs.val, fs.score);
      }
      mean_loss /= options.cv_folds;
      if (mean_loss < best) {
        best = mean_loss;
        best_round = r;
        stall = 0;
      } else if (++stall >= options.early_stop_rounds) {
        break;
      }
    }
    config_loss[static_cast<size_t>(c)] = best;
    config_round[static_cast<size_t>(c)] = best_round;
  }

  int best_c = 0;
  for (int c = 1; c < options.search_budget; ++c)
    if (config_loss[static_cast<size_t>(c)] < config_loss[static_cast<size_t>(best_c)])
      best_c = c;

  GbmModel model;
  model.params_ = configs[static_cast<size_t>(best_c)];
  model.params_.n_rounds = config_round[static_cast<size_t>(best_c)];
  model.cv_loss_ = config_loss[static_cast<size_t>(best_c)];
  model.search_losses_.assign(config_loss.begin(), config_loss.end());

  std::vector<int> all_rows(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) all_rows[static_cast<size_t>(i)] = static_cast<int>(i);
  std::vector<char> in_all(static_cast<size_t>(n), 1);
  model.f0_ = ls.base_score(all_rows);
  VectorXd score = VectorXd::Constant(n, model.f0_);
  for (int r = 1; r <= model.params_.n_rounds; ++r) {
    BoostTree tree = boost_round(
        x, presort, in_all, ls, model.params_, score,
        rng.derive(Stream::search, best_c, options.cv_folds, r), &g, &h, &scratch);
    for (Index i = 0; i < n; ++i) score[i] += tree.predict_row(x, i);
    model.trees_.push_back(std::move(tree));
  }
  return model;
}

GbmModel boost_train(const Eigen::Ref<const MatrixXd>& x, const VectorXd& y,
                     const BoostParams& params, Rng rng,
                     const VectorXd& weights) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < 1 || d < 1) throw std::invalid_argument("boost_train: empty input");
  if (y.size() != n)
    throw std::invalid_argument("boost_train: target length mismatch");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("boost_train: non-finite input");
  VectorXd w = weights;
  if (w.size() == 0) w = VectorXd::Ones(n);
  if (w.size() != n)
    throw std::invalid_argument("boost_train: weights length mismatch");
  if (params.loss == BoostLoss::logistic)
    for (Index i = 0; i < n; ++i)
      if (y[i] != 0.0 && y[i] != 1.0)
        throw std::invalid_argument("boost_train: logistic target must be 0/1");

  std::vector<std::vector<int>> presort(static_cast<size_t>(d));
  for (Index j = 0; j < d; ++j) {
    std::vector<int>& ord = presort[static_cast<size_t>(j)];
    ord.resize(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) ord[static_cast<size_t>(i)] = static_cast<int>(i);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](int a, int b) { return x(a, j) < x(b, j); });
  }

  const LossState ls{params.loss, y, w};
  GbmModel model;
  model.params_ = params;
  std::vector<int> all_rows(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) all_rows[static_cast<size_t>(i)] = static_cast<int>(i);
  std::vector<char> in_all(static_cast<size_t>(n), 1);
  model.f0_ = ls.base_score(all_rows);
  VectorXd score = VectorXd::Constant(n, model.f0_);
  VectorXd g(n), h(n);
  std::vector<char> scratch(static_cast<size_t>(n), 0);
  for (int r = 1; r <= params.n_rounds; ++r) {
    BoostTree tree = boost_round(x, presort, in_all, ls, params, score,
                                 rng.derive(Stream::train, r), &g, &h, &scratch);
    for (Index i = 0; i < n; ++i) score[i] += tree.predict_row(x, i);
    model.trees_.push_back(std::move(tree));
  }
  return model;
}

}  // namespace rlearn
