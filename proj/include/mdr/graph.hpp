// Bipartite operation/parameter behavior graph and its fixed-width embedding.
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mdr/event_model.hpp"

namespace mdr {

inline constexpr std::size_t kDefaultEmbeddingDim = 64;
inline constexpr std::uint64_t kDefaultHashSeed = 0x4d44525f67726170ULL;
inline constexpr int kMaxDepthBucket = 7;

enum class NameClass : std::uint8_t { RansomNoteLike, HashLike, DictionaryWord, Other };

std::string_view to_string(NameClass c) noexcept;
NameClass classify_name(std::string_view path);
/// Directory depth of a path, capped at kMaxDepthBucket.
int depth_bucket(std::string_view path) noexcept;

/// Edges only ever join an Operation to a parameter label, so the graph is
/// bipartite by construction.
class BehaviorGraph {
 public:
  using Edge = std::pair<Operation, std::string>;

  void add_edge(Operation op, const std::string& param, std::uint64_t count = 1);

  const std::set<Operation>& op_nodes() const noexcept { return ops_; }
  const std::set<std::string>& param_nodes() const noexcept { return params_; }
  const std::map<Edge, std::uint64_t>& edges() const noexcept { return edges_; }
  bool empty() const noexcept { return edges_.empty(); }

  bool operator==(const BehaviorGraph&) const = default;

 private:
  std::set<Operation> ops_;
  std::set<std::string> params_;
  std::map<Edge, std::uint64_t> edges_;
};

/// Parameter labels of one event: "ext:<ext>", "depth:<0..7+>", "name:<class>".
std::vector<std::string> event_params(const FileEvent& event);

BehaviorGraph build_graph(const ProcessWindow& window);

struct PatternEmbedding {
  std::vector<double> values;
  std::size_t dims() const noexcept { return values.size(); }
};

/// Signed feature hashing of (op, param) edges into D buckets. Each edge adds
/// sign * log1p(count) to one bucket; buckets are then squashed with
/// tanh(s / 4) so every value lies in (-1, 1). Throws Error(BadDim) unless D
/// is a power of two >= 8.
PatternEmbedding encode(const BehaviorGraph& graph, std::size_t dims = kDefaultEmbeddingDim,
                        std::uint64_t seed = kDefaultHashSeed);

/// Bucket and sign an edge hashes to; exposed for tests.
std::pair<std::size_t, double> edge_slot(Operation op, std::string_view param, std::size_t dims, std::uint64_t seed);

}  // namespace mdr
