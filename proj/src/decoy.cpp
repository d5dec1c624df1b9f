#include "mdr/decoy.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mdr/error.hpp"
#include "mdr/hashing.hpp"

namespace fs = std::filesystem;

namespace mdr {

namespace {

constexpr std::array kWords = {
    "the",      "quarterly", "review",    "budget",   "team",      "project",  "client",
    "schedule", "approved",  "pending",   "invoice",  "contract",  "summary",  "meeting",
    "report",   "revenue",   "forecast",  "deadline", "department", "manager", "update",
    "we",       "will",      "discuss",   "next",     "week",      "for",      "and",
    "with",     "including", "final",     "draft",    "figures",   "sales",    "regional",
    "office",   "plan",      "strategy",  "customer", "support",   "policy",   "training",
    "to",       "of",        "in",        "on",       "is",        "are",      "our",
    "new",      "annual",    "audit",     "results",  "expenses",  "vendor",   "payment",
    "terms",    "attached",  "please",    "confirm",  "by",        "friday",   "monday"};

struct NameBase {
  const char* stem;
  DecoyKind kind;
};

constexpr std::array kDictionaryNames = {
    NameBase{"Quarterly_Report", DecoyKind::Document},  NameBase{"Meeting_Notes", DecoyKind::Document},
    NameBase{"Project_Proposal", DecoyKind::Document},  NameBase{"Contract_Draft", DecoyKind::Document},
    NameBase{"Employee_Handbook", DecoyKind::Document}, NameBase{"Tax_Return", DecoyKind::Document},
    NameBase{"Passport_Scan", DecoyKind::Image},        NameBase{"Family_Photo", DecoyKind::Image},
    NameBase{"Whiteboard", DecoyKind::Image},           NameBase{"Receipt", DecoyKind::Image},
    NameBase{"Budget_Summary", DecoyKind::Spreadsheet}, NameBase{"Payroll", DecoyKind::Spreadsheet},
    NameBase{"Inventory", DecoyKind::Spreadsheet},      NameBase{"Expenses", DecoyKind::Spreadsheet}};

const std::vector<std::string>& extensions_for(DecoyKind kind) {
  static const std::vector<std::string> doc{"docx", "pdf", "txt", "doc", "rtf", "odt"};
  static const std::vector<std::string> img{"jpg", "png", "jpeg", "gif", "bmp", "tiff"};
  static const std::vector<std::string> sheet{"xlsx", "csv", "xls", "ods"};
  switch (kind) {
    case DecoyKind::Document: return doc;
    case DecoyKind::Image: return img;
    case DecoyKind::Spreadsheet: return sheet;
  }
  return doc;
}

template <typename Range>
const auto& pick(std::mt19937_64& rng, const Range& r) {
  std::uniform_int_distribution<std::size_t> d(0, std::size(r) - 1);
  return r[d(rng)];
}

int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string sentence(std::mt19937_64& rng) {
  std::string s;
  int n = uniform(rng, 6, 14);
  for (int i = 0; i < n; ++i) {
    std::string w = pick(rng, kWords);
    if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    if (i) s += ' ';
    s += w;
  }
  s += '.';
  return s;
}

std::string document_body(std::mt19937_64& rng) {
  std::string body;
  int paragraphs = uniform(rng, 3, 8);
  for (int p = 0; p < paragraphs; ++p) {
    int sentences = uniform(rng, 3, 7);
    for (int i = 0; i < sentences; ++i) {
      if (i) body += ' ';
      body += sentence(rng);
    }
    body += "\n\n";
  }
  return body;
}

std::string content_for(DecoyKind kind, std::string_view ext, std::mt19937_64& rng) {
  switch (kind) {
    case DecoyKind::Document: {
      std::string body = document_body(rng);
      if (ext == "pdf") return "%PDF-1.4\n%\xE2\xE3\xCF\xD3\n" + body;
      return body;
    }
    case DecoyKind::Image: {
      std::string out = (ext == "png") ? std::string("\x89PNG\r\n\x1a\n", 8)
                                       : std::string("\xFF\xD8\xFF\xE0\x00\x10JFIF\x00", 11);
      int n = uniform(rng, 2048, 6144);
      for (int i = 0; i < n; ++i) out += static_cast<char>(uniform(rng, 0, 255));
      return out;
    }
    case DecoyKind::Spreadsheet: {
      std::ostringstream csv;
      csv << "Date,Item,Category,Amount\n";
      int rows = uniform(rng, 20, 80);
      for (int i = 0; i < rows; ++i) {
        csv << "2024-" << (uniform(rng, 1, 12) < 10 ? "0" : "") << uniform(rng, 1, 12) << '-'
            << uniform(rng, 10, 28) << ',' << pick(rng, kWords) << ',' << pick(rng, kWords) << ','
            << uniform(rng, 1, 9999) << '.' << uniform(rng, 10, 99) << '\n';
      }
      return csv.str();
    }
  }
  return {};
}

std::pair<std::string, std::string> split_ext(std::string_view name) {
  auto dot = name.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return {std::string(name), {}};
  return {std::string(name.substr(0, dot)), std::string(name.substr(dot + 1))};
}

std::string dictionary_name(DecoyKind kind, std::mt19937_64& rng) {
  std::vector<const char*> stems;
  for (const auto& n : kDictionaryNames) {
    if (n.kind == kind) stems.push_back(n.stem);
  }
  std::string stem = pick(rng, stems);
  stem += '_';
  stem += std::to_string(uniform(rng, 2018, 2025));
  return stem + "." + pick(rng, extensions_for(kind));
}

/// Keeps the neighbor's token prefix and extension and varies the numeric tail.
std::string mimic_name(std::string_view neighbor, std::mt19937_64& rng) {
  auto [stem, ext] = split_ext(neighbor);
  std::size_t digits_at = stem.size();
  while (digits_at > 0 && std::isdigit(static_cast<unsigned char>(stem[digits_at - 1]))) --digits_at;
  std::string prefix = stem.substr(0, digits_at);
  std::string tail;
  if (digits_at < stem.size()) {
    std::size_t width = stem.size() - digits_at;
    long base = std::strtol(stem.c_str() + digits_at, nullptr, 10);
    long value = base + uniform(rng, -9, 9);
    if (value < 0) value = base + uniform(rng, 1, 9);
    tail = std::to_string(value);
    if (tail.size() < width) tail.insert(0, width - tail.size(), '0');
  } else {
    prefix += '_';
    tail = std::to_string(uniform(rng, 1, 99));
  }
  return prefix + tail + (ext.empty() ? "" : "." + ext);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string registry_key(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xF];
  }
  return out;
}

std::string_view to_string(DecoyKind kind) noexcept {
  switch (kind) {
    case DecoyKind::Document: return "document";
    case DecoyKind::Image: return "image";
    case DecoyKind::Spreadsheet: return "spreadsheet";
  }
  return "document";
}

DecoyKind parse_decoy_kind(std::string_view token) {
  auto t = lower(token);
  if (t == "document") return DecoyKind::Document;
  if (t == "image") return DecoyKind::Image;
  if (t == "spreadsheet") return DecoyKind::Spreadsheet;
  throw Error(ErrorCode::UnsupportedKind, std::string(token));
}

std::string_view to_string(DecoyStatus status) noexcept {
  switch (status) {
    case DecoyStatus::Intact: return "intact";
    case DecoyStatus::Modified: return "modified";
    case DecoyStatus::Missing: return "missing";
  }
  return "missing";
}

GeneratedDecoy generate_decoy(DecoyKind kind, NameStyle style,
                              const std::vector<std::string>& neighbor_names, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& exts = extensions_for(kind);

  std::vector<std::string> compatible;
  for (const auto& n : neighbor_names) {
    if (std::find(exts.begin(), exts.end(), extension_of(n)) != exts.end()) compatible.push_back(n);
  }
  std::set<std::string> taken;
  for (const auto& n : neighbor_names) taken.insert(lower(n));

  GeneratedDecoy out;
  bool mimic = style == NameStyle::MimicNeighbors && !compatible.empty();
  for (int attempt = 0; attempt < 200; ++attempt) {
    out.file_name = mimic ? mimic_name(pick(rng, compatible), rng) : dictionary_name(kind, rng);
    if (!taken.contains(lower(out.file_name))) break;
  }
  while (taken.contains(lower(out.file_name))) {
    auto [stem, ext] = split_ext(out.file_name);
    out.file_name = stem + "_" + std::to_string(uniform(rng, 100, 999)) + (ext.empty() ? "" : "." + ext);
  }
  out.content = content_for(kind, extension_of(out.file_name), rng);
  return out;
}

std::vector<fs::path> default_early_traversal_dirs() {
  const char* home = std::getenv("HOME");
  fs::path base = home ? fs::path(home) : fs::path("/root");
  return {base / ".local" / "share", base / ".config"};
}

// ---------------------------------------------------------------------------
// DecoyRegistry

DecoyRegistry::DecoyRegistry(const DecoyRegistry& other) : entries_(other.snapshot()) {}

DecoyRegistry& DecoyRegistry::operator=(const DecoyRegistry& other) {
  if (this != &other) {
    auto copy = other.snapshot();
    std::unique_lock lock(mutex_);
    entries_ = std::move(copy);
  }
  return *this;
}

bool DecoyRegistry::contains(std::string_view path) const {
  std::shared_lock lock(mutex_);
  return entries_.find(path) != entries_.end();
}

std::optional<DecoyRegistry::Entry> DecoyRegistry::find(std::string_view path) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(path);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void DecoyRegistry::add(std::string path, Entry entry) {
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign(std::move(path), std::move(entry));
}

bool DecoyRegistry::remove(std::string_view path) {
  std::unique_lock lock(mutex_);
  auto it = entries_.find(path);
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

std::size_t DecoyRegistry::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::map<std::string, DecoyRegistry::Entry, std::less<>> DecoyRegistry::snapshot() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

std::string DecoyRegistry::to_json() const {
  nlohmann::ordered_json root;
  root["version"] = 1;
  auto& arr = root["entries"] = nlohmann::ordered_json::array();
  for (const auto& [path, e] : snapshot()) {
    nlohmann::ordered_json j;
    j["path"] = path;
    j["digest"] = e.digest;
    j["kind"] = to_string(e.kind);
    j["deployed_at"] = e.deployed_at;
    arr.push_back(std::move(j));
  }
  return root.dump(2);
}

DecoyRegistry DecoyRegistry::from_json(std::string_view text) {
  auto root = nlohmann::json::parse(text, nullptr, false);
  if (root.is_discarded() || !root.is_object() || !root.contains("entries")) {
    throw Error(ErrorCode::IoFailure, "registry file is not valid JSON");
  }
  if (root.value("version", 0) != 1) throw Error(ErrorCode::IoFailure, "unsupported registry version");
  DecoyRegistry reg;
  for (const auto& j : root["entries"]) {
    Entry e;
    e.digest = j.at("digest").get<std::string>();
    e.kind = parse_decoy_kind(j.at("kind").get<std::string>());
    e.deployed_at = j.value("deployed_at", std::int64_t{0});
    reg.entries_.emplace(j.at("path").get<std::string>(), std::move(e));
  }
  return reg;
}

void DecoyRegistry::save(const fs::path& file) const {
  if (file.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + file.string());
  out << to_json() << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + file.string());
}

DecoyRegistry DecoyRegistry::load(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------------------

std::vector<std::string> deploy(const DecoySpec& spec, DecoyRegistry& registry,
                                const DeployOptions& options) {
  if (spec.count < 1) throw Error(ErrorCode::BadSpec, "decoy count must be >= 1");
  if (spec.kinds.empty()) throw Error(ErrorCode::BadSpec, "no decoy kinds requested");

  std::vector<fs::path> targets;
  if (options.automatic) targets = options.early_traversal_dirs;
  targets.push_back(spec.directory);

  std::vector<std::pair<std::string, DecoyRegistry::Entry>> staged;
  std::vector<std::string> result;

  auto rollback = [&](const std::string& why) -> Error {
    for (const auto& [path, _] : staged) {
      std::error_code ec;
      fs::remove(path, ec);
    }
    return Error(ErrorCode::IoFailure, why);
  };

  for (const auto& dir : targets) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw rollback("not a directory: " + dir.string());
    const std::string dir_key = registry_key(dir);

    std::vector<std::string> neighbors;
    std::vector<std::string> existing;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
      if (!entry.is_regular_file()) continue;
      std::string key = registry_key(entry.path());
      if (registry.contains(key)) {
        existing.push_back(key);
      } else {
        neighbors.push_back(entry.path().filename().string());
      }
    }
    if (ec) throw rollback("cannot list " + dir.string() + ": " + ec.message());
    std::sort(neighbors.begin(), neighbors.end());
    std::sort(existing.begin(), existing.end());

    int keep = std::min<int>(spec.count, static_cast<int>(existing.size()));
    result.insert(result.end(), existing.begin(), existing.begin() + keep);

    std::vector<std::string> taken = neighbors;
    for (const auto& e : existing) taken.push_back(std::string(basename_of(e)));
    for (int i = keep; i < spec.count; ++i) {
      DecoyKind kind = spec.kinds[static_cast<std::size_t>(i) % spec.kinds.size()];
      std::uint64_t seed = stable_hash(dir_key + "#" + std::to_string(i), options.seed);
      GeneratedDecoy decoy = generate_decoy(kind, spec.name_style, taken, seed);
      taken.push_back(decoy.file_name);

      fs::path target = dir / decoy.file_name;
      {
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (!out) throw rollback("cannot create " + target.string());
        out.write(decoy.content.data(), static_cast<std::streamsize>(decoy.content.size()));
        out.close();
        if (!out) throw rollback("write failed for " + target.string());
      }
      std::string key = registry_key(target);
      staged.emplace_back(key, DecoyRegistry::Entry{sha256_hex(decoy.content), options.deployed_at, kind});
      result.push_back(key);
    }
  }

  for (auto& [path, entry] : staged) registry.add(path, entry);
  return result;
}

std::optional<Trigger> check_event(const FileEvent& event, const DecoyRegistry& registry) {
  if (!is_modifying(event.operation)) return std::nullopt;
  const std::string* hit = nullptr;
  if (registry.contains(event.file_name)) {
    hit = &event.file_name;
  } else if (event.operation == Operation::Rename && event.old_file_name &&
             registry.contains(*event.old_file_name)) {
    hit = &*event.old_file_name;
  }
  if (!hit) return std::nullopt;
  return Trigger{TriggerSource::DecoyTouch, event.pid, event.pid_name, event.time, *hit,
                 event.operation, 0.0};
}

std::vector<DecoyCheck> verify(const DecoyRegistry& registry) {
  std::vector<DecoyCheck> out;
  for (const auto& [path, entry] : registry.snapshot()) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
      out.push_back({path, DecoyStatus::Missing});
      continue;
    }
    bool same = sha256_hex(read_file(path)) == entry.digest;
    out.push_back({path, same ? DecoyStatus::Intact : DecoyStatus::Modified});
  }
  return out;
}

}  // namespace mdr
