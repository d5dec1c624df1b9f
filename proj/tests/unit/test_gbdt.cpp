#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "mdr/error.hpp"
#include "mdr/gbdt.hpp"
#include "../oracles.hpp"

using namespace mdr;
using namespace mdr::oracle;

namespace {

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

Dataset separable(std::mt19937_64& rng, std::size_t n) {
  Dataset d(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double a = u(rng), b = u(rng);
    if (std::abs(a + b) < 0.05) continue;
    d.add_row(std::vector<double>{a, b}, a + b > 0 ? 1.0 : 0.0);
  }
  return d;
}

}  // namespace

TEST(Gbdt, SplitExampleAtTwoPointFive) {
  Dataset d(1);
  for (double v : {1.0, 2.0, 3.0, 4.0}) d.add_row(std::vector<double>{v}, v > 2 ? 1.0 : 0.0);
  std::vector<double> g = {-0.0, -0.0, -1.0, -1.0}, h(4, 1.0);
  auto rows = iota_n(4);
  std::vector<std::size_t> feats = {0};
  auto s = best_split(d, rows, g, h, feats, 0.0);
  EXPECT_EQ(s.feature, 0);
  EXPECT_DOUBLE_EQ(s.threshold, 2.5);
  // Gain is the drop in SSE: total SSE 1.0, split SSE 0.
  EXPECT_NEAR(s.gain, 1.0, 1e-12);
  EXPECT_NEAR(split_objective_direct(d, rows, d.y, 0, 2.5), 0.0, 1e-12);
}

TEST(Gbdt, DirectEqualsDecomposed) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 3);
  for (int round = 0; round < 1000; ++round) {
    std::size_t m = 2 + rng() % 30;
    Dataset d(3);
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) {
      d.add_row(std::vector<double>{n(rng), n(rng), n(rng)}, 0);
      y[i] = n(rng);
    }
    auto rows = iota_n(m);
    std::size_t f = rng() % 3;
    double t = d.at(rng() % m, f);
    double a = split_objective_direct(d, rows, y, f, t);
    double b = split_objective_decomposed(d, rows, y, f, t);
    ASSERT_NEAR(a, b, 1e-9);
  }
}

TEST(Gbdt, StumpMatchesBruteForce) {
  std::mt19937_64 rng(2);
  int checked = 0;
  for (int round = 0; round < 500; ++round) {
    auto d = random_dataset(rng, 4 + rng() % 40, 1 + rng() % 4, 12);
    auto o = brute_force_stump(d);
    if (o.best == 1e300) continue;
    TreeParams p;
    p.max_depth = 1;
    p.lambda = 0;
    p.gamma = -1;  // keep zero-gain stumps so they can be compared
    auto tree = fit_regression_tree(d, p);
    double sse = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) sse += std::pow(d.y[i] - tree.predict(d.row(i)), 2);
    ASSERT_NEAR(sse, o.best, 1e-9);
    if (o.runner_up - o.best > 1e-9 && tree.nodes.size() == 3) {
      EXPECT_EQ(static_cast<std::size_t>(tree.nodes[0].feature), o.feature);
      EXPECT_DOUBLE_EQ(tree.nodes[0].value, o.threshold);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Gbdt, TieBreakPrefersLowerFeatureThenThreshold) {
  Dataset d(2);
  // Both features induce the same partition.
  d.add_row(std::vector<double>{0, 0}, 0);
  d.add_row(std::vector<double>{1, 1}, 1);
  std::vector<double> g = {0, -1}, h = {1, 1};
  auto rows = iota_n(2);
  std::vector<std::size_t> feats = {1, 0};
  auto s = best_split(d, rows, g, h, feats, 0.0);
  EXPECT_EQ(s.feature, 0);
  EXPECT_DOUBLE_EQ(s.threshold, 0.5);
  std::vector<std::size_t> ordered = {0, 1};
  EXPECT_EQ(best_split(d, rows, g, h, ordered, 0.0).feature, 0);

  // Same gain at two thresholds of one feature: the lower threshold wins.
  Dataset e(1);
  for (double v : {0.0, 1.0, 2.0, 3.0}) e.add_row(std::vector<double>{v}, 0);
  std::vector<double> g2 = {1, -1, -1, 1}, h2(4, 1.0);
  auto rows4 = iota_n(4);
  std::vector<std::size_t> f0 = {0};
  EXPECT_DOUBLE_EQ(best_split(e, rows4, g2, h2, f0, 0.0).threshold, 0.5);
}

TEST(Gbdt, NoValidSplit) {
  Dataset d(2);
  for (int i = 0; i < 4; ++i) d.add_row(std::vector<double>{1, 2}, i % 2);
  std::vector<double> g = {1, -1, 1, -1}, h(4, 1.0);
  auto rows = iota_n(4);
  std::vector<std::size_t> feats = {0, 1};
  try {
    best_split(d, rows, g, h, feats, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoValidSplit);
  }
  EXPECT_THROW(best_split(d, std::span(rows).first(1), g, h, feats, 1.0), Error);
  EXPECT_THROW(best_split(d, rows, g, h, std::span<const std::size_t>{}, 1.0), Error);
  // Identical rows inside a tree become a leaf with the mean.
  TreeParams p;
  p.lambda = 0;
  auto t = fit_regression_tree(d, p);
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(t.nodes[0].value, 0.5);
}

TEST(Gbdt, PureLabelsGiveSingleLeaf) {
  Dataset d(2);
  for (int i = 0; i < 10; ++i) d.add_row(std::vector<double>{static_cast<double>(i), 1.0 * (i % 3)}, 1.0);
  TreeParams p;
  p.lambda = 0;
  auto t = fit_regression_tree(d, p);
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(t.nodes[0].value, 1.0);
}

TEST(Gbdt, XorAtDepthTwo) {
  Dataset d(2);
  d.add_row(std::vector<double>{0, 0}, 0);
  d.add_row(std::vector<double>{0, 1}, 1);
  d.add_row(std::vector<double>{1, 0}, 1);
  d.add_row(std::vector<double>{1, 1}, 0);
  TreeParams p;
  p.max_depth = 2;
  p.lambda = 0;
  auto t = fit_regression_tree(d, p);
  EXPECT_EQ(t.nodes.size() - t.leaves(), 3u);
  EXPECT_EQ(t.depth(), 2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(t.predict(d.row(i)), d.y[i]);
}

TEST(Gbdt, EmptyFeatureSetGivesMajorityLeaf) {
  Dataset d(1);
  for (int i = 0; i < 5; ++i) d.add_row(std::vector<double>{static_cast<double>(i)}, i < 4 ? 1.0 : 0.0);
  std::vector<double> g(5), h(5, 1.0);
  for (std::size_t i = 0; i < 5; ++i) g[i] = -d.y[i];
  TreeParams p;
  p.lambda = 0;
  auto t = grow_tree(d, g, h, std::span<const std::size_t>{}, p);
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(t.nodes[0].value, 0.8);
}

TEST(Gbdt, GammaPrunesWeakSplits) {
  std::mt19937_64 rng(3);
  auto d = random_dataset(rng, 200, 3, 20);
  TreeParams loose, strict;
  strict.gamma = 1e6;
  EXPECT_GT(fit_regression_tree(d, loose).nodes.size(), 1u);
  EXPECT_EQ(fit_regression_tree(d, strict).nodes.size(), 1u);
}

TEST(Gbdt, SeparableDatasetIsFitPerfectly) {
  std::mt19937_64 rng(4);
  auto d = separable(rng, 300);
  BoostParams p;
  p.n_trees = 10;
  p.eta = 0.3;
  auto f = fit(d, p);
  std::size_t correct = 0;
  auto probs = f.predict_batch(d);
  for (std::size_t i = 0; i < d.rows(); ++i) correct += (probs[i] >= 0.5) == (d.y[i] == 1.0) ? 1 : 0;
  EXPECT_EQ(correct, d.rows());
}

TEST(Gbdt, ZeroLearningRateKeepsPrior) {
  std::mt19937_64 rng(5);
  auto d = separable(rng, 100);
  BoostParams p;
  p.n_trees = 5;
  p.eta = 0;
  auto f = fit(d, p);
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_DOUBLE_EQ(f.predict(d.row(i)), sigmoid(f.base_score));
}

TEST(Gbdt, EmptyAndConstantForests) {
  BoostedForest f;
  f.n_features = 3;
  f.base_score = 0.7;
  std::vector<double> row = {1, 2, 3};
  EXPECT_DOUBLE_EQ(f.predict(row), sigmoid(0.7));
  Tree leaf;
  leaf.nodes.push_back({-1, 2.0, -1});
  f.trees.push_back(leaf);
  f.eta = 0.25;
  EXPECT_DOUBLE_EQ(f.predict(row), sigmoid(0.7 + 0.25 * 2.0));
  std::vector<double> bad = {1, 2};
  try {
    f.predict(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WidthMismatch);
  }
  Dataset d(3);
  EXPECT_THROW(d.add_row(bad, 1), Error);
}

TEST(Gbdt, SingleClass) {
  Dataset d(1);
  for (int i = 0; i < 5; ++i) d.add_row(std::vector<double>{static_cast<double>(i)}, 1);
  try {
    fit(d, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClass);
  }
}

TEST(Gbdt, TrainingLossIsMonotone) {
  std::mt19937_64 rng(6);
  for (int round = 0; round < 20; ++round) {
    auto d = random_dataset(rng, 50 + rng() % 200, 1 + rng() % 6, 16);
    BoostParams p;
    p.n_trees = 30;
    FitReport report;
    fit(d, p, &report);
    ASSERT_EQ(report.train_loss.size(), 31u);
    for (std::size_t i = 1; i < report.train_loss.size(); ++i) {
      EXPECT_LE(report.train_loss[i], report.train_loss[i - 1] + 1e-12);
    }
  }
}

TEST(Gbdt, BatchEqualsSingle) {
  std::mt19937_64 rng(7);
  auto d = random_dataset(rng, 300, 5, 30);
  auto f = fit(d, {});
  auto batch = f.predict_batch(d);
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(batch[i], f.predict(d.row(i)));
}

TEST(Gbdt, DeterministicBytes) {
  std::mt19937_64 rng(8);
  auto d = random_dataset(rng, 400, 6, 30);
  EXPECT_EQ(fit(d, {}).serialize(), fit(d, {}).serialize());
}

TEST(Gbdt, MonotoneRescalingKeepsPartition) {
  std::mt19937_64 rng(9);
  for (int round = 0; round < 10; ++round) {
    auto d = random_dataset(rng, 200, 4, 20);
    auto scaled = d;
    std::size_t col = rng() % 4;
    for (std::size_t i = 0; i < d.rows(); ++i) scaled.x[i * 4 + col] = std::exp(d.at(i, col)) * 10 - 3;
    BoostParams p;
    p.n_trees = 20;
    auto a = fit(d, p);
    auto b = fit(scaled, p);
    for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(a.margin(d.row(i)), b.margin(scaled.row(i)));
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
      ASSERT_EQ(a.trees[t].nodes.size(), b.trees[t].nodes.size());
      for (std::size_t k = 0; k < a.trees[t].nodes.size(); ++k) {
        EXPECT_EQ(a.trees[t].nodes[k].feature, b.trees[t].nodes[k].feature);
      }
    }
  }
}

TEST(Gbdt, ModelRoundTrip) {
  std::mt19937_64 rng(10);
  auto d = random_dataset(rng, 500, 8, 40);
  auto f = fit(d, {});
  f.embedding_dim = 64;
  f.hash_seed = 0xabcdef;
  auto bytes = f.serialize();
  auto back = BoostedForest::deserialize(bytes);
  EXPECT_EQ(back, f);
  std::uniform_real_distribution<double> u(-1, 12);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> row(8);
    for (auto& v : row) v = u(rng);
    EXPECT_EQ(back.predict(row), f.predict(row));
  }
  EXPECT_EQ(back.serialize(), bytes);
}

TEST(Gbdt, CorruptModels) {
  std::mt19937_64 rng(11);
  auto d = random_dataset(rng, 100, 3, 10);
  auto bytes = fit(d, {}).serialize();
  auto expect_corrupt = [](std::string_view b, std::string_view needle) {
    try {
      BoostedForest::deserialize(b);
      ADD_FAILURE() << "accepted corrupt model";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::CorruptModel);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_corrupt(std::string_view(bytes).substr(0, bytes.size() / 2), "");
  expect_corrupt(std::string_view(bytes).substr(0, 6), "");
  expect_corrupt("", "magic");
  auto bumped = bytes;
  bumped[4] = 2;
  expect_corrupt(bumped, "unsupported model version 2 (expected 1)");
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  expect_corrupt(flipped, "checksum");
}

TEST(Gbdt, DefaultModelFitsSizeBudget) {
  std::mt19937_64 rng(12);
  auto d = random_dataset(rng, 1000, 76, 40);
  auto f = fit(d, {});
  EXPECT_EQ(f.trees.size(), 100u);
  for (const auto& t : f.trees) EXPECT_LE(t.depth(), 4);
  EXPECT_LE(f.serialize().size(), 64u * 1024u);
}
