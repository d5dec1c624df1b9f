// Binary model format, all integers and doubles little-endian:
//   "MDRF" | u32 version | u32 n_features | u32 embedding_dim | u64 hash_seed
//   | f64 eta | f64 gamma | f64 lambda | f64 base_score | u32 n_trees
//   | per tree: u32 n_nodes, then n_nodes x (i16 feature, f64 value) in preorder
//   | u32 crc32 of everything before it
#include <zlib.h>

#include <bit>
#include <fstream>
#include <sstream>

#include "mdr/error.hpp"
#include "mdr/gbdt.hpp"

namespace mdr {

namespace {

constexpr char kMagic[4] = {'M', 'D', 'R', 'F'};

class Writer {
 public:
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  template <typename T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorCode::CorruptModel, "model file is truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

// Rebuilds right-child links for a preorder node list; false if malformed.
bool link(Tree& tree, std::size_t& i, std::size_t n_features, int depth = 0) {
  if (i >= tree.nodes.size() || depth > 64) return false;
  auto& node = tree.nodes[i];
  std::size_t self = i++;
  if (node.feature < 0) return node.feature == -1;
  if (static_cast<std::size_t>(node.feature) >= n_features) return false;
  if (!link(tree, i, n_features, depth + 1)) return false;
  tree.nodes[self].right = static_cast<std::int32_t>(i);
  return link(tree, i, n_features, depth + 1);
}

}  // namespace

std::string BoostedForest::serialize() const {
  Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint32_t>(kModelFormatVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(n_features));
  w.uint<std::uint32_t>(embedding_dim);
  w.uint<std::uint64_t>(hash_seed);
  w.f64(eta);
  w.f64(gamma);
  w.f64(lambda);
  w.f64(base_score);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(trees.size()));
  for (const auto& t : trees) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.uint<std::uint16_t>(static_cast<std::uint16_t>(n.feature));
      w.f64(n.value);
    }
  }
  w.uint<std::uint32_t>(checksum(w.str()));
  return std::move(w.str());
}

BoostedForest BoostedForest::deserialize(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != std::string_view(kMagic, 4)) {
    throw Error(ErrorCode::CorruptModel, "not a model file (bad magic)");
  }
  Reader r(bytes.substr(4));
  auto version = r.uint<std::uint32_t>();
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::CorruptModel, "unsupported model version " + std::to_string(version) + " (expected " +
                                             std::to_string(kModelFormatVersion) + ")");
  }
  if (bytes.size() < 12) throw Error(ErrorCode::CorruptModel, "model file is truncated");
  Reader crc_reader(bytes.substr(bytes.size() - 4));
  if (crc_reader.uint<std::uint32_t>() != checksum(bytes.substr(0, bytes.size() - 4))) {
    throw Error(ErrorCode::CorruptModel, "checksum mismatch (truncated or modified file)");
  }

  BoostedForest f;
  Reader body(bytes.substr(8, bytes.size() - 12));
  f.n_features = body.uint<std::uint32_t>();
  f.embedding_dim = body.uint<std::uint32_t>();
  f.hash_seed = body.uint<std::uint64_t>();
  f.eta = body.f64();
  f.gamma = body.f64();
  f.lambda = body.f64();
  f.base_score = body.f64();
  auto n_trees = body.uint<std::uint32_t>();
  for (std::uint32_t t = 0; t < n_trees; ++t) {
    Tree tree;
    auto n_nodes = body.uint<std::uint32_t>();
    if (n_nodes == 0 || n_nodes > bytes.size()) throw Error(ErrorCode::CorruptModel, "bad node count");
    tree.nodes.resize(n_nodes);
    for (auto& n : tree.nodes) {
      n.feature = static_cast<std::int16_t>(body.uint<std::uint16_t>());
      n.value = body.f64();
    }
    std::size_t i = 0;
    if (!link(tree, i, f.n_features) || i != tree.nodes.size()) {
      throw Error(ErrorCode::CorruptModel, "tree " + std::to_string(t) + " is malformed");
    }
    f.trees.push_back(std::move(tree));
  }
  if (!body.done()) throw Error(ErrorCode::CorruptModel, "trailing bytes after last tree");
  return f;
}

void BoostedForest::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  auto bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write model " + file.string());
}

BoostedForest BoostedForest::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read model " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace mdr
