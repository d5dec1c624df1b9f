#include "mdr/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdr/error.hpp"

namespace mdr {

namespace {

// Gains closer than this are treated as equal, so the earlier candidate
// (lower feature, lower threshold) keeps the tie.
double tie_eps(double best) { return 1e-10 * (1.0 + std::abs(best)); }

double midpoint(double a, double b) {
  double t = a + (b - a) / 2.0;
  return t < b ? t : a;
}

struct Totals {
  double g = 0;
  double h = 0;
};

Totals totals(std::span<const std::size_t> rows, std::span<const double> g, std::span<const double> h) {
  Totals t;
  for (auto r : rows) {
    t.g += g[r];
    t.h += h[r];
  }
  return t;
}

// Scans one feature's rows (sorted by value) and updates `best`.
void sweep(const Dataset& data, std::size_t feature, std::span<const std::size_t> sorted, std::span<const double> g,
           std::span<const double> h, Totals all, double lambda, std::size_t min_leaf, SplitCandidate& best) {
  const std::size_t m = sorted.size();
  const double parent = all.g * all.g / (all.h + lambda);
  double gl = 0, hl = 0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    gl += g[sorted[k]];
    hl += h[sorted[k]];
    double xa = data.at(sorted[k], feature);
    double xb = data.at(sorted[k + 1], feature);
    if (!(xa < xb)) continue;
    if (k + 1 < min_leaf || m - k - 1 < min_leaf) continue;
    double gr = all.g - gl, hr = all.h - hl;
    double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
    if (!best.valid() || gain > best.gain + tie_eps(best.gain)) {
      best.feature = static_cast<int>(feature);
      best.threshold = midpoint(xa, xb);
      best.gain = gain;
    }
  }
}

std::vector<std::size_t> sorted_by_feature(const Dataset& data, std::span<const std::size_t> rows, std::size_t f) {
  std::vector<std::size_t> out(rows.begin(), rows.end());
  std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    double xa = data.at(a, f), xb = data.at(b, f);
    return xa < xb || (xa == xb && a < b);
  });
  return out;
}

class Grower {
 public:
  Grower(const Dataset& data, std::span<const double> g, std::span<const double> h,
         std::span<const std::size_t> features, const TreeParams& params)
      : data_(data), g_(g), h_(h), features_(features.begin(), features.end()), params_(params) {
    std::sort(features_.begin(), features_.end());
    std::vector<std::size_t> all(data.rows());
    std::iota(all.begin(), all.end(), 0);
    by_row_ = all;
    for (auto f : features_) sorted_.push_back(sorted_by_feature(data, all, f));
    goes_left_.assign(data.rows(), 0);
    scratch_.resize(data.rows());
  }

  Tree run() {
    if (by_row_.empty()) {
      tree_.nodes.push_back({});
      return std::move(tree_);
    }
    build(0, 0, by_row_.size());
    return std::move(tree_);
  }

 private:
  double leaf_weight(std::size_t lo, std::size_t hi) const {
    auto t = totals(std::span(by_row_).subspan(lo, hi - lo), g_, h_);
    return -t.g / (t.h + params_.lambda);
  }

  bool pure(std::size_t lo, std::size_t hi) const {
    for (std::size_t i = lo + 1; i < hi; ++i) {
      if (g_[by_row_[i]] != g_[by_row_[lo]]) return false;
    }
    return true;
  }

  // Stable partition of every row list on the chosen split; returns the split point.
  std::size_t partition(std::size_t lo, std::size_t hi, const SplitCandidate& s) {
    for (std::size_t i = lo; i < hi; ++i) {
      auto r = by_row_[i];
      goes_left_[r] = data_.at(r, static_cast<std::size_t>(s.feature)) <= s.threshold;
    }
    auto split_list = [&](std::vector<std::size_t>& list) {
      std::size_t w = lo, n_right = 0;
      for (std::size_t i = lo; i < hi; ++i) {
        if (goes_left_[list[i]]) {
          list[w++] = list[i];
        } else {
          scratch_[n_right++] = list[i];
        }
      }
      std::copy_n(scratch_.begin(), n_right, list.begin() + static_cast<std::ptrdiff_t>(w));
      return w;
    };
    std::size_t mid = split_list(by_row_);
    for (auto& list : sorted_) split_list(list);
    return mid;
  }

  std::size_t make_leaf(std::size_t lo, std::size_t hi) {
    tree_.nodes.push_back({-1, leaf_weight(lo, hi), -1});
    return tree_.nodes.size() - 1;
  }

  std::size_t build(int depth, std::size_t lo, std::size_t hi) {
    if (depth >= params_.max_depth || features_.empty() || hi - lo < 2 || pure(lo, hi)) return make_leaf(lo, hi);

    auto all = totals(std::span(by_row_).subspan(lo, hi - lo), g_, h_);
    SplitCandidate best;
    for (std::size_t k = 0; k < features_.size(); ++k) {
      sweep(data_, features_[k], std::span(sorted_[k]).subspan(lo, hi - lo), g_, h_, all, params_.lambda,
            params_.min_leaf, best);
    }
    if (!best.valid()) return make_leaf(lo, hi);

    std::size_t self = tree_.nodes.size();
    tree_.nodes.push_back({static_cast<std::int16_t>(best.feature), best.threshold, -1});
    std::size_t mid = partition(lo, hi, best);
    std::size_t left = build(depth + 1, lo, mid);
    std::size_t right = build(depth + 1, mid, hi);
    tree_.nodes[self].right = static_cast<std::int32_t>(right);

    bool children_are_leaves = tree_.nodes[left].feature < 0 && tree_.nodes[right].feature < 0;
    if (children_are_leaves && best.gain / 2.0 <= params_.gamma) {
      tree_.nodes.resize(self);
      // Rows of [lo, hi) are no longer in index order after the partition.
      std::sort(by_row_.begin() + static_cast<std::ptrdiff_t>(lo), by_row_.begin() + static_cast<std::ptrdiff_t>(hi));
      return make_leaf(lo, hi);
    }
    return self;
  }

  const Dataset& data_;
  std::span<const double> g_, h_;
  std::vector<std::size_t> features_;
  TreeParams params_;
  std::vector<std::size_t> by_row_;
  std::vector<std::vector<std::size_t>> sorted_;
  std::vector<char> goes_left_;
  std::vector<std::size_t> scratch_;
  Tree tree_;
};

}  // namespace

void Dataset::add_row(std::span<const double> values, double label) {
  if (values.size() != n_features) {
    throw Error(ErrorCode::WidthMismatch, "row has " + std::to_string(values.size()) + " values, dataset expects " +
                                              std::to_string(n_features));
  }
  x.insert(x.end(), values.begin(), values.end());
  y.push_back(label);
}

double split_objective_direct(const Dataset& data, std::span<const std::size_t> rows, std::span<const double> y,
                              std::size_t feature, double threshold) {
  double s1 = 0, s2 = 0;
  std::size_t m1 = 0, m2 = 0;
  for (auto r : rows) {
    if (data.at(r, feature) <= threshold) {
      s1 += y[r];
      ++m1;
    } else {
      s2 += y[r];
      ++m2;
    }
  }
  double mean1 = m1 ? s1 / static_cast<double>(m1) : 0.0;
  double mean2 = m2 ? s2 / static_cast<double>(m2) : 0.0;
  double loss = 0;
  for (auto r : rows) {
    double d = y[r] - (data.at(r, feature) <= threshold ? mean1 : mean2);
    loss += d * d;
  }
  return loss;
}

double split_objective_decomposed(const Dataset& data, std::span<const std::size_t> rows, std::span<const double> y,
                                  std::size_t feature, double threshold) {
  double sq = 0, s1 = 0, s2 = 0;
  std::size_t m1 = 0, m2 = 0;
  for (auto r : rows) {
    sq += y[r] * y[r];
    if (data.at(r, feature) <= threshold) {
      s1 += y[r];
      ++m1;
    } else {
      s2 += y[r];
      ++m2;
    }
  }
  double out = sq;
  if (m1) out -= s1 * s1 / static_cast<double>(m1);
  if (m2) out -= s2 * s2 / static_cast<double>(m2);
  return out;
}

SplitCandidate best_split(const Dataset& data, std::span<const std::size_t> rows, std::span<const double> g,
                          std::span<const double> h, std::span<const std::size_t> features, double lambda,
                          std::size_t min_leaf) {
  if (rows.size() < 2 || features.empty()) throw Error(ErrorCode::NoValidSplit, "need at least two rows and a feature");
  std::vector<std::size_t> by_row(rows.begin(), rows.end());
  std::sort(by_row.begin(), by_row.end());
  auto all = totals(by_row, g, h);
  std::vector<std::size_t> ordered(features.begin(), features.end());
  std::sort(ordered.begin(), ordered.end());
  SplitCandidate best;
  bool any_distinct = false;
  for (auto f : ordered) {
    auto sorted = sorted_by_feature(data, by_row, f);
    any_distinct = any_distinct || data.at(sorted.front(), f) < data.at(sorted.back(), f);
    sweep(data, f, sorted, g, h, all, lambda, min_leaf, best);
  }
  if (!any_distinct) throw Error(ErrorCode::NoValidSplit, "all rows are identical on every feature");
  return best;
}

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = row[static_cast<std::size_t>(n.feature)] <= n.value ? i + 1 : static_cast<std::size_t>(n.right);
  }
  return nodes[i].value;
}

std::size_t Tree::leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.feature < 0; }));
}

int Tree::depth() const {
  // Preorder walk with an explicit stack of (node, depth).
  int deepest = 0;
  std::vector<std::pair<std::size_t, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    if (i >= nodes.size()) continue;
    deepest = std::max(deepest, d);
    if (nodes[i].feature >= 0) {
      stack.push_back({i + 1, d + 1});
      stack.push_back({static_cast<std::size_t>(nodes[i].right), d + 1});
    }
  }
  return deepest;
}

Tree grow_tree(const Dataset& data, std::span<const double> g, std::span<const double> h,
               std::span<const std::size_t> features, const TreeParams& params) {
  return Grower(data, g, h, features, params).run();
}

Tree fit_regression_tree(const Dataset& data, const TreeParams& params) {
  std::vector<double> g(data.y.size()), h(data.y.size(), 1.0);
  std::transform(data.y.begin(), data.y.end(), g.begin(), [](double v) { return -v; });
  std::vector<std::size_t> features(data.n_features);
  std::iota(features.begin(), features.end(), 0);
  return grow_tree(data, g, h, features, params);
}

double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

double log_loss(std::span<const double> y, std::span<const double> p) noexcept {
  if (y.empty()) return 0;
  constexpr double kEps = 1e-15;
  double total = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double q = std::clamp(p[i], kEps, 1.0 - kEps);
    total -= y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  return total / static_cast<double>(y.size());
}

double BoostedForest::margin(std::span<const double> row) const {
  if (row.size() != n_features) {
    throw Error(ErrorCode::WidthMismatch,
                "row has " + std::to_string(row.size()) + " features, model expects " + std::to_string(n_features));
  }
  double sum = 0;
  for (const auto& t : trees) sum += t.predict(row);
  return base_score + eta * sum;
}

double BoostedForest::predict(std::span<const double> row) const { return sigmoid(margin(row)); }

std::vector<double> BoostedForest::predict_batch(const Dataset& data) const {
  std::vector<double> out;
  out.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) out.push_back(predict(data.row(i)));
  return out;
}

BoostedForest fit(const Dataset& data, const BoostParams& params, FitReport* report) {
  const std::size_t m = data.rows();
  const auto positives = static_cast<std::size_t>(std::count(data.y.begin(), data.y.end(), 1.0));
  if (positives == 0 || positives == m) throw Error(ErrorCode::SingleClass, "training data needs both labels");

  BoostedForest forest;
  forest.n_features = data.n_features;
  forest.eta = params.eta;
  forest.gamma = params.tree.gamma;
  forest.lambda = params.tree.lambda;
  double prior = static_cast<double>(positives) / static_cast<double>(m);
  forest.base_score = std::log(prior / (1.0 - prior));

  std::vector<std::size_t> features(data.n_features);
  std::iota(features.begin(), features.end(), 0);
  std::vector<double> margin(m, forest.base_score), p(m), g(m), h(m);
  auto refresh = [&] {
    for (std::size_t i = 0; i < m; ++i) p[i] = sigmoid(margin[i]);
    if (report) report->train_loss.push_back(log_loss(data.y, p));
  };
  refresh();
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      g[i] = p[i] - data.y[i];
      h[i] = std::max(p[i] * (1.0 - p[i]), 1e-16);
    }
    Tree tree = grow_tree(data, g, h, features, params.tree);
    for (std::size_t i = 0; i < m; ++i) margin[i] += params.eta * tree.predict(data.row(i));
    forest.trees.push_back(std::move(tree));
    refresh();
  }
  return forest;
}

}  // namespace mdr
