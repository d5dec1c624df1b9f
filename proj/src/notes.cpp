#include "mdr/notes.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "mdr/error.hpp"

namespace mdr {

namespace {

// Decodes one UTF-8 sequence at `i`. Invalid bytes decode to themselves with
// length 1 so that arbitrary input never throws.
char32_t decode(std::string_view s, std::size_t i, std::size_t& len) {
  auto b = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t j) {
    return j < s.size() && (static_cast<unsigned char>(s[j]) & 0xC0) == 0x80;
  };
  if (b < 0x80) {
    len = 1;
    return b;
  }
  if ((b & 0xE0) == 0xC0 && cont(i + 1)) {
    len = 2;
    return static_cast<char32_t>(((b & 0x1F) << 6) | (s[i + 1] & 0x3F));
  }
  if ((b & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
    len = 3;
    return static_cast<char32_t>(((b & 0x0F) << 12) | ((s[i + 1] & 0x3F) << 6) | (s[i + 2] & 0x3F));
  }
  if ((b & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
    len = 4;
    return static_cast<char32_t>(((b & 0x07) << 18) | ((s[i + 1] & 0x3F) << 12) | ((s[i + 2] & 0x3F) << 6) |
                                 (s[i + 3] & 0x3F));
  }
  len = 1;
  return 0xFFFD;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_space(char32_t c) {
  return c == ' ' || (c >= 0x09 && c <= 0x0D) || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F ||
         c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
                       (c >= 0x7B && c <= 0x7E);
  return c == 0xA1 || c == 0xA7 || c == 0xAB || c == 0xB6 || c == 0xB7 || c == 0xBB || c == 0xBF ||
         (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x3003) ||
         (c >= 0x3008 && c <= 0x3011) || (c >= 0xFF01 && c <= 0xFF0F) || c == 0xFFFD;
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if ((c >= 0xC0 && c <= 0xDE && c != 0xD7)) return c + 32;
  if (c >= 0x100 && c <= 0x17F && c != 0x130 && c != 0x138 && c != 0x149 && c != 0x178) {
    bool odd_upper = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
    if (odd_upper ? (c % 2 == 1) : (c % 2 == 0)) return c + 1;
    return c;
  }
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

std::string join(const std::vector<std::string>& words, std::size_t from, std::size_t n) {
  std::size_t len = n - 1;
  for (std::size_t i = from; i < from + n; ++i) len += words[i].size();
  std::string out;
  out.reserve(len);
  for (std::size_t i = from; i < from + n; ++i) {
    if (i != from) out += ' ';
    out += words[i];
  }
  return out;
}

std::unordered_set<std::string> fragment_set(const TokenizedNote& doc, std::size_t n) {
  auto grams = ngrams(doc, n);
  return {std::make_move_iterator(grams.begin()), std::make_move_iterator(grams.end())};
}

}  // namespace

TokenizedNote tokenize(std::string_view text) {
  TokenizedNote note;
  std::vector<char32_t> token;
  auto flush = [&] {
    std::size_t b = 0, e = token.size();
    while (b < e && is_punct(token[b])) ++b;
    while (e > b && is_punct(token[e - 1])) --e;
    if (b < e) {
      std::string word;
      for (std::size_t i = b; i < e; ++i) encode(to_lower(token[i]), word);
      note.words.push_back(std::move(word));
    }
    token.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = 1;
    char32_t cp = decode(text, i, len);
    i += len;
    if (is_space(cp)) {
      flush();
    } else {
      token.push_back(cp);
    }
  }
  flush();
  return note;
}

std::vector<std::string> ngrams(const TokenizedNote& note, std::size_t n) {
  if (n == 0) throw std::invalid_argument("ngrams: n must be >= 1");
  std::vector<std::string> out;
  if (note.k() < n) return out;
  out.reserve(note.k() - n + 1);
  for (std::size_t i = 0; i + n <= note.k(); ++i) out.push_back(join(note.words, i, n));
  return out;
}

std::map<std::string, std::uint64_t> count_fragments(std::span<const TokenizedNote> notes, std::size_t n) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& note : notes) {
    for (auto& g : ngrams(note, n)) ++counts[std::move(g)];
  }
  return counts;
}

std::vector<std::string> PoolFragment::words() const {
  std::vector<std::string> out;
  std::istringstream ss(text);
  for (std::string w; ss >> w;) out.push_back(w);
  return out;
}

GenePool::GenePool(std::size_t n, std::size_t top_k, std::size_t source_count, std::size_t counted_fragments,
                   std::vector<PoolFragment> fragments)
    : n_(n),
      top_k_(top_k),
      source_count_(source_count),
      counted_fragments_(counted_fragments),
      fragments_(std::move(fragments)) {
  index_.reserve(fragments_.size());
  for (std::size_t i = 0; i < fragments_.size(); ++i) index_.emplace(fragments_[i].text, i);
}

std::optional<std::size_t> GenePool::find(std::string_view fragment) const {
  auto it = index_.find(std::string(fragment));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string GenePool::to_json() const {
  nlohmann::ordered_json root;
  root["n"] = n_;
  root["top_k"] = top_k_;
  root["source_count"] = source_count_;
  root["counted_fragments"] = counted_fragments_;
  auto& arr = root["fragments"] = nlohmann::ordered_json::array();
  for (const auto& f : fragments_) {
    nlohmann::ordered_json j;
    j["words"] = f.words();
    j["f"] = f.score;
    arr.push_back(std::move(j));
  }
  return root.dump(1);
}

GenePool GenePool::from_json(std::string_view text) {
  auto root = nlohmann::json::parse(text, nullptr, false);
  if (root.is_discarded() || !root.is_object() || !root.contains("fragments")) {
    throw Error(ErrorCode::IoFailure, "pool file is not valid JSON");
  }
  std::size_t n = root.at("n").get<std::size_t>();
  std::vector<PoolFragment> frags;
  for (const auto& j : root["fragments"]) {
    auto words = j.at("words").get<std::vector<std::string>>();
    if (words.size() != n) throw Error(ErrorCode::IoFailure, "fragment width does not match n");
    std::string text;
    for (std::size_t i = 0; i < words.size(); ++i) text += (i ? " " : "") + words[i];
    frags.push_back({std::move(text), j.at("f").get<double>()});
  }
  return GenePool(n, root.value("top_k", kDefaultTopK), root.value("source_count", std::size_t{0}),
                  root.value("counted_fragments", frags.size()), std::move(frags));
}

void GenePool::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + file.string());
  out << to_json() << '\n';
}

GenePool GenePool::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

GenePool build_pool(std::span<const TokenizedNote> notes, std::size_t n, std::size_t top_k) {
  auto counts = count_fragments(notes, n);
  if (counts.empty()) throw Error(ErrorCode::EmptyCorpus, "no note has at least n tokens");

  std::uint64_t total = 0;
  for (const auto& [_, c] : counts) total += c;

  std::vector<PoolFragment> frags;
  frags.reserve(counts.size());
  for (const auto& [text, c] : counts) {
    frags.push_back({text, static_cast<double>(c) / static_cast<double>(total)});
  }
  // counts is ordered lexicographically, so a stable sort on score alone
  // keeps ties lexicographic.
  std::stable_sort(frags.begin(), frags.end(),
                   [](const PoolFragment& a, const PoolFragment& b) { return a.score > b.score; });
  std::size_t counted = frags.size();
  if (frags.size() > top_k) frags.resize(top_k);
  return GenePool(n, top_k, notes.size(), counted, std::move(frags));
}

SimilarityVerdict similarity(const TokenizedNote& doc, const GenePool& pool, double tau) {
  SimilarityVerdict v;
  v.threshold = tau;
  std::vector<std::size_t> hits;
  for (const auto& frag : fragment_set(doc, pool.n())) {
    if (auto idx = pool.find(frag)) hits.push_back(*idx);
  }
  std::sort(hits.begin(), hits.end());
  for (auto idx : hits) {
    const auto& f = pool.fragments()[idx];
    v.score += f.score;
    v.matched.emplace_back(f.text, f.score);
  }
  v.is_note = v.score >= tau;
  return v;
}

std::size_t matched_count(const TokenizedNote& doc, const GenePool& pool) {
  std::size_t count = 0;
  for (const auto& frag : fragment_set(doc, pool.n())) {
    if (pool.find(frag)) ++count;
  }
  return count;
}

std::vector<ThresholdRow> sweep_threshold(const GenePool& pool, std::span<const LabeledDoc> docs,
                                          std::span<const double> taus) {
  std::size_t positives = 0;
  for (const auto& d : docs) positives += d.is_note ? 1 : 0;
  if (positives == 0 || positives == docs.size()) {
    throw Error(ErrorCode::DegenerateLabels, "sweep needs both notes and benign documents");
  }
  std::vector<double> sims;
  sims.reserve(docs.size());
  for (const auto& d : docs) sims.push_back(similarity(d.doc, pool).score);

  std::vector<ThresholdRow> rows;
  for (double tau : taus) {
    ThresholdRow r;
    r.tau = tau;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      bool flagged = sims[i] >= tau;
      if (docs[i].is_note) {
        (flagged ? r.tp : r.fn)++;
      } else {
        (flagged ? r.fp : r.tn)++;
      }
    }
    r.precision = (r.tp + r.fp) ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 1.0;
    r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    r.fpr = static_cast<double>(r.fp) / static_cast<double>(r.fp + r.tn);
    rows.push_back(r);
  }
  return rows;
}

std::vector<WindowRow> sweep_window(std::span<const TokenizedNote> notes, std::span<const TokenizedNote> benign,
                                    std::span<const std::size_t> n_grid, std::size_t top_k) {
  if (notes.empty() || benign.empty()) throw Error(ErrorCode::DegenerateLabels, "both corpora must be non-empty");
  std::vector<WindowRow> rows;
  for (std::size_t n : n_grid) {
    WindowRow row;
    row.n = n;
    GenePool pool;
    try {
      pool = build_pool(notes, n, top_k);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyCorpus) throw;
      rows.push_back(row);
      continue;
    }
    row.pool_size = pool.size();
    for (const auto& b : benign) row.threshold = std::max(row.threshold, matched_count(b, pool));
    std::size_t hits = 0;
    for (const auto& note : notes) hits += matched_count(note, pool) > row.threshold ? 1 : 0;
    row.recall = static_cast<double>(hits) / static_cast<double>(notes.size());
    rows.push_back(row);
  }
  return rows;
}

bool looks_like_text(std::string_view bytes) {
  if (bytes.empty()) return false;
  std::size_t control = 0;
  for (std::size_t i = 0; i < bytes.size();) {
    auto b = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 1;
    if (b >= 0x80) {
      if (decode(bytes, i, len) == 0xFFFD && len == 1) return false;
    } else if (b < 0x20 && b != '\n' && b != '\r' && b != '\t') {
      ++control;
    }
    i += len;
  }
  return control * 100 <= bytes.size();
}

}  // namespace mdr
