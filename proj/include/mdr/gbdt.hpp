// Gradient-boosted regression trees, written from scratch.
//
// Split search works on per-row gradient statistics (g, h). Plain
// squared-error regression is the special case g = -y, h = 1, lambda = 0,
// where the gain of a split is exactly the drop in sum of squared errors.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mdr {

/// Row-major feature matrix with binary labels.
struct Dataset {
  std::size_t n_features = 0;
  std::vector<double> x;
  std::vector<double> y;

  Dataset() = default;
  explicit Dataset(std::size_t width) : n_features(width) {}

  std::size_t rows() const noexcept { return n_features ? x.size() / n_features : 0; }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * n_features, n_features}; }
  double at(std::size_t i, std::size_t j) const { return x[i * n_features + j]; }
  /// Throws Error(WidthMismatch) when values.size() != n_features.
  void add_row(std::span<const double> values, double label);
};

struct SplitCandidate {
  int feature = -1;
  double threshold = 0;
  double gain = 0;  // G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)
  bool valid() const noexcept { return feature >= 0; }
};

// Two forms of the squared-error split objective for one (feature, threshold):
// the direct within-branch sum of squared deviations, and the decomposed
// sum(y^2) - (sum_R1 y)^2/m1 - (sum_R2 y)^2/m2 used by the sorted sweep.
double split_objective_direct(const Dataset& data, std::span<const std::size_t> rows, std::span<const double> y,
                              std::size_t feature, double threshold);
double split_objective_decomposed(const Dataset& data, std::span<const std::size_t> rows, std::span<const double> y,
                                  std::size_t feature, double threshold);

/// Best (feature, threshold) over `features` by a sorted sweep per feature.
/// Thresholds are midpoints between adjacent distinct values; ties go to the
/// lower feature index, then the lower threshold. Candidates leaving fewer
/// than min_leaf rows on a side are skipped. Throws Error(NoValidSplit) when
/// there are fewer than two rows or no feature takes two distinct values.
SplitCandidate best_split(const Dataset& data, std::span<const std::size_t> rows, std::span<const double> g,
                          std::span<const double> h, std::span<const std::size_t> features, double lambda,
                          std::size_t min_leaf = 1);

struct TreeParams {
  int max_depth = 4;
  std::size_t min_leaf = 1;
  double gamma = 0;
  double lambda = 1;
};

/// Flat preorder tree. Internal nodes send x left iff x[feature] <= value;
/// the left child of node i is i + 1.
struct Tree {
  struct Node {
    std::int16_t feature = -1;  // -1 for leaves
    double value = 0;           // threshold, or leaf weight
    std::int32_t right = -1;
    bool operator==(const Node&) const = default;
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> row) const;
  std::size_t leaves() const;
  int depth() const;
  bool operator==(const Tree&) const = default;
};

/// Grows to max_depth on gradient statistics, then collapses bottom-up every
/// split whose children are both leaves and whose structure gain gain/2 is
/// <= gamma. A node whose rows share one gradient value is a leaf, as is a
/// node with no features or no valid split. Leaf weight is -G/(H+lambda).
Tree grow_tree(const Dataset& data, std::span<const double> g, std::span<const double> h,
               std::span<const std::size_t> features, const TreeParams& params);

/// Squared-error regression tree on `data.y` (g = -y, h = 1).
Tree fit_regression_tree(const Dataset& data, const TreeParams& params);

struct BoostParams {
  std::size_t n_trees = 100;
  double eta = 0.1;
  TreeParams tree;
};

class BoostedForest {
 public:
  std::size_t n_features = 0;
  std::uint32_t embedding_dim = 0;
  std::uint64_t hash_seed = 0;
  double eta = 0.1;
  double gamma = 0;
  double lambda = 1;
  double base_score = 0;  // prior log-odds
  std::vector<Tree> trees;

  double margin(std::span<const double> row) const;
  /// sigmoid(base_score + eta * sum of tree outputs). Throws Error(WidthMismatch).
  double predict(std::span<const double> row) const;
  std::vector<double> predict_batch(const Dataset& data) const;

  std::string serialize() const;
  static BoostedForest deserialize(std::string_view bytes);
  void save(const std::filesystem::path& file) const;
  static BoostedForest load(const std::filesystem::path& file);

  bool operator==(const BoostedForest&) const = default;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct FitReport {
  std::vector<double> train_loss;  // mean log-loss after each tree; [0] is the prior
};

/// Logistic-loss boosting. Throws Error(SingleClass) unless both labels occur.
BoostedForest fit(const Dataset& data, const BoostParams& params, FitReport* report = nullptr);

double sigmoid(double z) noexcept;
double log_loss(std::span<const double> y, std::span<const double> p) noexcept;

}  // namespace mdr
