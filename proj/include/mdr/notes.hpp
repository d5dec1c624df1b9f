// Ransom-note detection by word n-gram fragment matching.
//
// A gene pool holds the most frequent n-word fragments of known notes with
// scores normalized over *all* counted fragments (so retained scores keep
// their global meaning after truncation to top_k). A document's similarity is
// the sum of scores of the distinct pool fragments it contains.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mdr {

inline constexpr double kDefaultTauSim = 0.21;
inline constexpr std::size_t kDefaultNgram = 3;
inline constexpr std::size_t kDefaultTopK = 300;

struct TokenizedNote {
  std::vector<std::string> words;
  std::size_t k() const noexcept { return words.size(); }
};

/// Splits on Unicode whitespace, strips leading/trailing punctuation,
/// lowercases, and drops empty tokens. Input is UTF-8.
TokenizedNote tokenize(std::string_view text);

/// Sliding n-word fragments, words joined by a single space. Returns exactly
/// max(0, k - n + 1) fragments in order. n must be >= 1.
std::vector<std::string> ngrams(const TokenizedNote& note, std::size_t n);

/// c_i for every fragment over all notes.
std::map<std::string, std::uint64_t> count_fragments(std::span<const TokenizedNote> notes, std::size_t n);

struct PoolFragment {
  std::string text;  // space-joined words
  double score = 0;  // f_i
  std::vector<std::string> words() const;
};

class GenePool {
 public:
  GenePool() = default;
  GenePool(std::size_t n, std::size_t top_k, std::size_t source_count, std::size_t counted_fragments,
           std::vector<PoolFragment> fragments);

  std::size_t n() const noexcept { return n_; }
  std::size_t top_k() const noexcept { return top_k_; }
  std::size_t source_count() const noexcept { return source_count_; }
  /// Distinct fragments counted before truncation.
  std::size_t counted_fragments() const noexcept { return counted_fragments_; }
  /// Sorted by descending score, ties lexicographic.
  const std::vector<PoolFragment>& fragments() const noexcept { return fragments_; }
  bool empty() const noexcept { return fragments_.empty(); }
  std::size_t size() const noexcept { return fragments_.size(); }
  /// Index into fragments(), if present.
  std::optional<std::size_t> find(std::string_view fragment) const;

  std::string to_json() const;
  static GenePool from_json(std::string_view text);
  void save(const std::filesystem::path& file) const;
  static GenePool load(const std::filesystem::path& file);

 private:
  std::size_t n_ = kDefaultNgram;
  std::size_t top_k_ = kDefaultTopK;
  std::size_t source_count_ = 0;
  std::size_t counted_fragments_ = 0;
  std::vector<PoolFragment> fragments_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Throws Error(EmptyCorpus) when no note has at least n tokens.
GenePool build_pool(std::span<const TokenizedNote> notes, std::size_t n = kDefaultNgram,
                    std::size_t top_k = kDefaultTopK);

struct SimilarityVerdict {
  double score = 0;
  std::vector<std::pair<std::string, double>> matched;  // pool order
  bool is_note = false;
  double threshold = kDefaultTauSim;
};

SimilarityVerdict similarity(const TokenizedNote& doc, const GenePool& pool, double tau = kDefaultTauSim);

/// Number of distinct pool fragments present in `doc`.
std::size_t matched_count(const TokenizedNote& doc, const GenePool& pool);

struct LabeledDoc {
  TokenizedNote doc;
  bool is_note = false;
};

struct ThresholdRow {
  double tau = 0;
  double precision = 0;  // 1.0 when nothing is flagged
  double recall = 0;
  double fpr = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Precision / recall / FPR for each tau (flag iff sim >= tau).
/// Throws Error(DegenerateLabels) unless both classes are present.
std::vector<ThresholdRow> sweep_threshold(const GenePool& pool, std::span<const LabeledDoc> docs,
                                          std::span<const double> taus);

struct WindowRow {
  std::size_t n = 0;
  std::size_t pool_size = 0;
  // Largest matched-fragment count seen on a benign doc; a doc is flagged
  // when its count exceeds it, so benign false positives are zero.
  std::size_t threshold = 0;
  double recall = 0;
};

/// For each n: build a top_k pool from `notes`, pick the smallest count
/// threshold with zero benign hits, report recall on `notes`.
std::vector<WindowRow> sweep_window(std::span<const TokenizedNote> notes, std::span<const TokenizedNote> benign,
                                    std::span<const std::size_t> n_grid, std::size_t top_k = kDefaultTopK);

/// Heuristic used before scoring dropped files: valid UTF-8 with few control bytes.
bool looks_like_text(std::string_view bytes);

}  // namespace mdr
