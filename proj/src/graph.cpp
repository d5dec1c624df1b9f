#include "mdr/graph.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "mdr/error.hpp"
#include "mdr/hashing.hpp"

namespace mdr {

namespace {

constexpr std::array<std::string_view, 12> kNoteWords = {
    "decrypt", "ransom", "restore", "recover", "readme", "read_me",
    "how_to",  "howto",  "help",    "instruction", "unlock", "payment"};

bool is_sep(char c) { return c == '/' || c == '\\'; }

}  // namespace

std::string_view to_string(NameClass c) noexcept {
  switch (c) {
    case NameClass::RansomNoteLike: return "note";
    case NameClass::HashLike: return "hash";
    case NameClass::DictionaryWord: return "word";
    case NameClass::Other: return "other";
  }
  return "other";
}

NameClass classify_name(std::string_view path) {
  std::string base(basename_of(path));
  std::transform(base.begin(), base.end(), base.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto w : kNoteWords) {
    if (base.find(w) != std::string::npos) return NameClass::RansomNoteLike;
  }
  std::string_view stem(base);
  stem = stem.substr(0, stem.find('.'));
  if (stem.empty()) return NameClass::Other;

  std::size_t hex = 0, digits = 0, letters = 0, other = 0, longest_alpha = 0, run = 0;
  for (char c : stem) {
    auto u = static_cast<unsigned char>(c);
    if (std::isdigit(u)) {
      ++digits;
      ++hex;
    } else if (std::isalpha(u)) {
      ++letters;
      if (c <= 'f') ++hex;
    } else if (c != '_' && c != '-' && c != ' ') {
      ++other;
    }
    run = std::isalpha(u) ? run + 1 : 0;
    longest_alpha = std::max(longest_alpha, run);
  }
  if (other == 0 && stem.size() >= 12 && hex == stem.size()) return NameClass::HashLike;
  if (other == 0 && stem.size() >= 16 && digits + letters == stem.size() && digits >= 3 && letters >= 3) {
    return NameClass::HashLike;
  }
  if (other == 0 && longest_alpha >= 3) return NameClass::DictionaryWord;
  return NameClass::Other;
}

int depth_bucket(std::string_view path) noexcept {
  if (!path.empty() && is_sep(path.front())) path.remove_prefix(1);
  auto n = std::count_if(path.begin(), path.end(), is_sep);
  return static_cast<int>(std::min<std::ptrdiff_t>(n, kMaxDepthBucket));
}

void BehaviorGraph::add_edge(Operation op, const std::string& param, std::uint64_t count) {
  if (count == 0) return;
  ops_.insert(op);
  params_.insert(param);
  edges_[{op, param}] += count;
}

std::vector<std::string> event_params(const FileEvent& event) {
  int depth = depth_bucket(event.file_name);
  return {"ext:" + event.file_type,
          "depth:" + (depth >= kMaxDepthBucket ? std::to_string(kMaxDepthBucket) + "+" : std::to_string(depth)),
          "name:" + std::string(to_string(classify_name(event.file_name)))};
}

BehaviorGraph build_graph(const ProcessWindow& window) {
  BehaviorGraph g;
  for (const auto& e : window.events) {
    for (const auto& p : event_params(e)) g.add_edge(e.operation, p);
  }
  return g;
}

std::pair<std::size_t, double> edge_slot(Operation op, std::string_view param, std::size_t dims, std::uint64_t seed) {
  std::string key(to_string(op));
  key += '|';
  key += param;
  std::uint64_t h = stable_hash(key, seed);
  return {static_cast<std::size_t>(h & (dims - 1)), (h >> 63) ? -1.0 : 1.0};
}

PatternEmbedding encode(const BehaviorGraph& graph, std::size_t dims, std::uint64_t seed) {
  if (dims < 8 || (dims & (dims - 1)) != 0) {
    throw Error(ErrorCode::BadDim, "embedding width must be a power of two >= 8, got " + std::to_string(dims));
  }
  PatternEmbedding out;
  out.values.assign(dims, 0.0);
  for (const auto& [edge, count] : graph.edges()) {
    auto [bucket, sign] = edge_slot(edge.first, edge.second, dims, seed);
    out.values[bucket] += sign * std::log1p(static_cast<double>(count));
  }
  for (auto& v : out.values) v = std::tanh(v / 4.0);
  return out;
}

}  // namespace mdr
