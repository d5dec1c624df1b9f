#include "mdr/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

#include "mdr/error.hpp"
#include "mdr/hashing.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace mdr {

namespace {

constexpr std::array<std::string_view, 7> kTopFolders = {"AppData", "Desktop", "Documents", "Downloads",
                                                          "Music",   "Pictures", "Videos"};

constexpr std::array<std::string_view, 24> kDirWords = {
    "Projects", "Reports", "Archive", "Personal", "Work",    "Family",  "Travel",  "Invoices",
    "Taxes",    "School",  "Drafts",  "Shared",   "Clients", "Budget",  "Photos",  "Scans",
    "Notes",    "Backup",  "Media",   "Old",      "2021",    "2022",    "2023",    "Misc"};

constexpr std::array<std::string_view, 28> kFileWords = {
    "report",  "budget",  "invoice", "summary", "notes",   "plan",    "contract", "resume",
    "photo",   "holiday", "meeting", "letter",  "draft",   "final",   "scan",     "receipt",
    "agenda",  "minutes", "proposal", "thesis", "slides",  "data",    "export",   "IMG",
    "DSC",     "family",  "project", "statement"};

constexpr std::array<std::string_view, 6> kUniformSuffixes = {"locked", "lockbit", "encrypted", "crypt", "enc", "wncry"};
constexpr std::array<std::string_view, 5> kNoteNames = {"HOW_TO_DECRYPT.txt", "README_RESTORE_FILES.txt",
                                                        "!!!READ_ME!!!.txt", "RECOVER-FILES.html",
                                                        "DECRYPT_INSTRUCTIONS.txt"};
constexpr std::array<std::string_view, 5> kRansomNames = {"svchost.exe", "invoice_viewer.exe", "update.exe",
                                                          "lb3.exe", "wmic32.exe"};

constexpr std::string_view kAlnum = "abcdefghijklmnopqrstuvwxyz0123456789";
constexpr std::string_view kHex = "0123456789abcdef";

template <typename C>
const auto& pick(std::mt19937_64& rng, const C& pool) {
  std::uniform_int_distribution<std::size_t> d(0, std::size(pool) - 1);
  return pool[d(rng)];
}

std::string token(std::mt19937_64& rng, std::string_view alphabet, std::size_t len) {
  std::uniform_int_distribution<std::size_t> d(0, alphabet.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < len; ++i) out += alphabet[d(rng)];
  return out;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }
double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

std::string pad(int v, int width) {
  std::string s = std::to_string(v);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

std::string_view default_benign_name(BenignProfile p) {
  switch (p) {
    case BenignProfile::Indexer: return "SearchIndexer.exe";
    case BenignProfile::OfficeSave: return "WINWORD.EXE";
    case BenignProfile::Installer: return "setup.exe";
    case BenignProfile::Backup: return "backup.exe";
    case BenignProfile::Cleanup: return "cleanmgr.exe";
    case BenignProfile::Organizer: return "PhotoOrganizer.exe";
    case BenignProfile::Downloader: return "chrome.exe";
    case BenignProfile::Zip: return "gzip.exe";
  }
  return "benign.exe";
}

// Accumulates events for one process.
class TraceBuilder {
 public:
  TraceBuilder(Pid pid, std::string name) : pid_(pid), name_(std::move(name)) {}

  void add(double t, Operation op, std::string path, std::optional<std::string> old = std::nullopt) {
    events_.push_back(make_event(static_cast<Micros>(std::llround(t)), pid_, name_, op, std::move(path), std::move(old)));
  }
  std::vector<FileEvent> take() { return std::move(events_); }

 private:
  Pid pid_;
  std::string name_;
  std::vector<FileEvent> events_;
};

void generate_ransomware(const ScenarioSpec& spec, const RansomwareSpec& rs, const UserTree& tree,
                         std::mt19937_64& rng, GeneratedTrace& out) {
  const int family = rs.mode <= 2 ? 0 : (rs.mode <= 4 ? 1 : 2);
  const bool uniform_suffix = rs.mode % 2 == 1;
  const std::string fixed_suffix(pick(rng, kUniformSuffixes));
  const std::string note_name(pick(rng, kNoteNames));
  const std::string note_text = generate_note(rng);

  TraceBuilder b(spec.pid, out.truth.pid_name);
  const double dt = 1e6 / rs.files_per_second;
  double t = static_cast<double>(spec.start_time);
  std::size_t done = 0;

  for (std::size_t d = 0; d < tree.dirs.size(); ++d) {
    if (rs.max_files && done >= rs.max_files) break;
    const auto& dir = tree.dirs[d];
    if (rs.note_every_k_dirs > 0 && d % static_cast<std::size_t>(rs.note_every_k_dirs) == 0) {
      std::string note = dir.path + "/" + note_name;
      b.add(t, Operation::Create, note);
      b.add(t + dt * 0.1, Operation::Write, note);
      out.note_texts[note] = note_text;
      out.truth.notes.push_back(note);
      t += dt * 0.2;
    }
    for (const auto& f : dir.files) {
      const bool decoy = tree.is_decoy(f);
      if (decoy && rs.avoid_decoys) continue;
      if (!decoy && rs.max_files && done >= rs.max_files) break;
      std::string target = f + "." + (uniform_suffix ? fixed_suffix : token(rng, kAlnum, 5));
      b.add(t, Operation::Read, f);
      if (family == 0) {
        b.add(t + dt * 0.25, Operation::Overwrite, f);
        b.add(t + dt * 0.5, Operation::Rename, target, f);
      } else {
        b.add(t + dt * 0.25, Operation::Create, target);
        b.add(t + dt * 0.5, Operation::Write, target);
        b.add(t + dt * 0.75, family == 1 ? Operation::Delete : Operation::Smash, f);
      }
      auto when = static_cast<Micros>(std::llround(t + dt * 0.25));
      if (decoy) {
        out.truth.decoy_touches.push_back(family == 0 ? when : static_cast<Micros>(std::llround(t + dt * 0.75)));
      } else {
        out.truth.encrypted.push_back({f, when});
        ++done;
      }
      t += dt;
    }
  }
  out.events = b.take();
}

class BenignGenerator {
 public:
  BenignGenerator(const ScenarioSpec& spec, const BenignSpec& bs, const UserTree& tree, std::mt19937_64& rng,
                  GeneratedTrace& out)
      : spec_(spec), bs_(bs), tree_(tree), rng_(rng), out_(out), b_(spec.pid, out.truth.pid_name),
        files_(tree.files()) {}

  void run() {
    const double start = static_cast<double>(spec_.start_time);
    const double end = start + bs_.duration_s * 1e6;
    std::exponential_distribution<double> gap(bs_.ops_per_second / 1e6);
    double touch_at = bs_.touch_decoys && !tree_.decoys.empty() ? start + uniform(rng_, 0.1, 0.4) * (end - start) : end + 1;
    setup();
    for (double t = start + gap(rng_); t < end; t += gap(rng_)) {
      if (t >= touch_at) {
        touch_decoy(t, pick(rng_, tree_.decoys));
        touch_at = end + 1;
        continue;
      }
      action(t);
    }
    out_.events = b_.take();
    std::stable_sort(out_.events.begin(), out_.events.end(),
                     [](const FileEvent& a, const FileEvent& b) { return a.time < b.time; });
  }

 private:
  double step() const { return 1e6 / bs_.ops_per_second / 8.0; }

  const std::string& any_file() { return pick(rng_, files_); }

  std::vector<std::string> files_with(std::initializer_list<std::string_view> exts) const {
    std::vector<std::string> out;
    for (const auto& f : files_) {
      auto e = extension_of(f);
      if (std::find(exts.begin(), exts.end(), e) != exts.end()) out.push_back(f);
    }
    return out;
  }

  void setup() {
    switch (bs_.profile) {
      case BenignProfile::OfficeSave: {
        auto docs = files_with({"docx", "xlsx", "pptx", "txt", "csv"});
        if (docs.empty()) docs = files_;
        for (int i = 0, n = uniform_int(rng_, 1, 3); i < n; ++i) working_.push_back(pick(rng_, docs));
        break;
      }
      case BenignProfile::Installer: {
        app_root_ = "C:/Program Files/" + std::string(pick(rng_, kDirWords)) + "Suite";
        for (int i = 0; i < 24; ++i) {
          std::string dir = app_root_;
          for (int d = 0, depth = uniform_int(rng_, 0, 3); d < depth; ++d) dir += "/" + token(rng_, "abcdefgh", 4);
          app_dirs_.push_back(dir);
        }
        break;
      }
      case BenignProfile::Organizer: {
        working_ = files_with({"jpg", "png", "mp4"});
        if (working_.empty()) working_ = files_;
        std::shuffle(working_.begin(), working_.end(), rng_);
        break;
      }
      case BenignProfile::Zip:
      case BenignProfile::Backup: {
        working_ = files_;
        break;
      }
      default: break;
    }
  }

  void office_save(double t, const std::string& doc) {
    std::string dir(dirname_of(doc));
    std::string fresh = dir + "/~WRL" + pad(uniform_int(rng_, 0, 9999), 4) + ".tmp";
    std::string stale = dir + "/~WRL" + pad(uniform_int(rng_, 0, 9999), 4) + ".tmp";
    if (stale == fresh) stale = dir + "/~WRD" + pad(uniform_int(rng_, 0, 9999), 4) + ".tmp";
    double s = step();
    b_.add(t, Operation::Create, fresh);
    b_.add(t + s, Operation::Write, fresh);
    b_.add(t + 2 * s, Operation::Rename, stale, doc);
    b_.add(t + 3 * s, Operation::Rename, doc, fresh);
    b_.add(t + 4 * s, Operation::Delete, stale);
  }

  void touch_decoy(double t, const std::string& decoy) {
    out_.truth.decoy_touches.push_back(static_cast<Micros>(std::llround(t)));
    switch (bs_.profile) {
      case BenignProfile::OfficeSave:
        b_.add(t - step(), Operation::Read, decoy);
        office_save(t, decoy);
        break;
      case BenignProfile::Cleanup: b_.add(t, Operation::Delete, decoy); break;
      case BenignProfile::Organizer: {
        std::string dir(dirname_of(decoy));
        b_.add(t, Operation::Rename, dir + "/" + std::to_string(uniform_int(rng_, 2015, 2024)) + "_" +
                                         std::string(basename_of(decoy)), decoy);
        break;
      }
      case BenignProfile::Zip: zip_file(t, decoy); break;
      default: b_.add(t, Operation::Write, decoy); break;
    }
  }

  void zip_file(double t, const std::string& f) {
    double s = step();
    b_.add(t, Operation::Read, f);
    b_.add(t + s, Operation::Create, f + ".gz");
    b_.add(t + 2 * s, Operation::Write, f + ".gz");
    b_.add(t + 3 * s, Operation::Delete, f);
  }

  void action(double t) {
    const double s = step();
    switch (bs_.profile) {
      case BenignProfile::Indexer:
        b_.add(t, Operation::Read, any_file());
        if (++counter_ % 20 == 0) {
          b_.add(t + s, Operation::Write, "C:/ProgramData/Microsoft/Search/Data/Applications/Windows/Windows.edb");
        }
        break;
      case BenignProfile::OfficeSave: {
        const auto& doc = pick(rng_, working_);
        if (chance(rng_, 0.3)) {
          office_save(t, doc);
        } else if (chance(rng_, 0.2) && extension_of(doc) == "txt") {
          b_.add(t, Operation::Overwrite, doc);
        } else {
          b_.add(t, Operation::Read, doc);
        }
        break;
      }
      case BenignProfile::Installer: {
        if (++counter_ % 10 == 0) {
          b_.add(t, Operation::Write, app_root_ + "/install.log");
          break;
        }
        static constexpr std::array<std::string_view, 4> common = {"LICENSE.txt", "README.md", "__init__.py",
                                                                    "config.json"};
        static constexpr std::array<std::string_view, 7> exts = {"dll", "exe", "json", "dat", "xml", "png", "pak"};
        std::string name = chance(rng_, 0.1) ? std::string(pick(rng_, common))
                                             : token(rng_, "abcdefghijklmnopqrstuvwxyz", 6) + "." + std::string(pick(rng_, exts));
        std::string path = pick(rng_, app_dirs_) + "/" + name;
        b_.add(t, Operation::Create, path);
        b_.add(t + s, Operation::Write, path);
        break;
      }
      case BenignProfile::Backup: {
        if (cursor_ >= working_.size()) cursor_ = 0;
        const auto& f = working_[cursor_++];
        std::string dest = "D:/Backup" + f.substr(2);
        b_.add(t, Operation::Read, f);
        if (backed_up_.contains(dest) || chance(rng_, 0.3)) {
          b_.add(t + s, Operation::Overwrite, dest);
        } else {
          b_.add(t + s, Operation::Create, dest);
          b_.add(t + 2 * s, Operation::Write, dest);
        }
        backed_up_.insert(dest);
        break;
      }
      case BenignProfile::Cleanup: {
        static constexpr std::array<std::string_view, 2> roots = {"C:/Users/user/AppData/Local/Temp", "C:/Windows/Temp"};
        static constexpr std::array<std::string_view, 4> exts = {"tmp", "log", "etl", "dmp"};
        std::string path = std::string(pick(rng_, roots)) + "/" + (chance(rng_, 0.5) ? "tmp" + token(rng_, kHex, 4)
                                                                                   : std::string(pick(rng_, kFileWords))) +
                           "." + std::string(pick(rng_, exts));
        if (chance(rng_, 0.2)) {
          b_.add(t, Operation::Smash, path);
          b_.add(t + s, Operation::Delete, path);
        } else if (chance(rng_, 0.15)) {
          b_.add(t, Operation::Read, path);
        } else {
          b_.add(t, Operation::Delete, path);
        }
        break;
      }
      case BenignProfile::Organizer: {
        if (cursor_ >= working_.size()) {
          b_.add(t, Operation::Read, any_file());
          break;
        }
        const auto& f = working_[cursor_++];
        std::string dir(dirname_of(f));
        int year = uniform_int(rng_, 2015, 2024);
        std::string target = dir + "/" + std::to_string(year) + "-" + pad(uniform_int(rng_, 1, 12), 2) + "-" +
                             pad(uniform_int(rng_, 1, 28), 2) + "_" + pad(static_cast<int>(cursor_), 4) + "." +
                             extension_of(f);
        b_.add(t, Operation::Read, f);
        b_.add(t + s, Operation::Rename, target, f);
        break;
      }
      case BenignProfile::Downloader: {
        static constexpr std::array<std::string_view, 6> exts = {"pdf", "zip", "exe", "jpg", "docx", "msi"};
        std::string final_name = "C:/Users/user/Downloads/" + std::string(pick(rng_, kFileWords)) + "_" +
                                 token(rng_, "0123456789", 3) + "." + std::string(pick(rng_, exts));
        std::string partial = final_name + ".crdownload";
        b_.add(t, Operation::Create, partial);
        for (int i = 1, n = uniform_int(rng_, 1, 4); i <= n; ++i) b_.add(t + i * s, Operation::Write, partial);
        b_.add(t + 5 * s, Operation::Rename, final_name, partial);
        break;
      }
      case BenignProfile::Zip: {
        if (cursor_ >= working_.size()) break;
        zip_file(t, working_[cursor_++]);
        break;
      }
    }
  }

  const ScenarioSpec& spec_;
  const BenignSpec& bs_;
  const UserTree& tree_;
  std::mt19937_64& rng_;
  GeneratedTrace& out_;
  TraceBuilder b_;
  std::vector<std::string> files_;
  std::vector<std::string> working_;
  std::vector<std::string> app_dirs_;
  std::string app_root_;
  std::set<std::string> backed_up_;
  std::size_t cursor_ = 0;
  std::size_t counter_ = 0;
};

json window_to_json(const CorpusWindow& w) {
  json events = json::array();
  for (const auto& e : w.window.events) events.push_back(json::parse(serialize_event(e)));
  return {{"kind", w.kind},
          {"label", w.ransomware ? 1 : 0},
          {"seed", w.seed},
          {"pid", w.window.pid},
          {"pid_name", w.window.pid_name},
          {"window_start", w.window.window_start},
          {"window_end", w.window.window_end},
          {"events", std::move(events)}};
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + file.string());
}

}  // namespace

std::string_view to_string(BenignProfile profile) noexcept {
  switch (profile) {
    case BenignProfile::Indexer: return "indexer";
    case BenignProfile::OfficeSave: return "office";
    case BenignProfile::Installer: return "installer";
    case BenignProfile::Backup: return "backup";
    case BenignProfile::Cleanup: return "cleanup";
    case BenignProfile::Organizer: return "organizer";
    case BenignProfile::Downloader: return "downloader";
    case BenignProfile::Zip: return "zip";
  }
  return "indexer";
}

std::optional<BenignProfile> parse_benign_profile(std::string_view name) {
  for (int i = 0; i < kBenignProfileCount; ++i) {
    auto p = static_cast<BenignProfile>(i);
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

bool UserTree::is_decoy(std::string_view path) const {
  return std::binary_search(decoys.begin(), decoys.end(), path, std::less<>());
}

std::vector<std::string> UserTree::files() const {
  std::vector<std::string> out;
  out.reserve(user_files);
  for (const auto& d : dirs) {
    for (const auto& f : d.files) {
      if (!is_decoy(f)) out.push_back(f);
    }
  }
  return out;
}

UserTree build_user_tree(const TargetTree& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x7472656573ULL);
  UserTree tree;

  auto make_files = [&](const std::string& dir, int n) {
    std::set<std::string> names;
    while (static_cast<int>(names.size()) < n) {
      names.insert(dir + "/" + std::string(pick(rng, kFileWords)) + "_" + std::to_string(uniform_int(rng, 1, 9999)) +
                   "." + pick(rng, spec.extensions));
    }
    return std::vector<std::string>(names.begin(), names.end());
  };
  auto decoy_name = [&](const std::string& dir) {
    return dir + "/00_" + std::string(pick(rng, kFileWords)) + "_" + std::to_string(uniform_int(rng, 2018, 2025)) +
           "." + (chance(rng, 0.5) ? "docx" : "xlsx");
  };

  // Preorder with files before subdirectories, subdirectories sorted by name.
  std::vector<std::pair<std::string, int>> stack;  // (path, remaining depth)
  for (auto it = kTopFolders.rbegin(); it != kTopFolders.rend(); ++it) {
    stack.push_back({spec.root + "/" + std::string(*it), *it == "AppData" ? -1 : spec.depth});
  }
  while (!stack.empty()) {
    auto [path, depth] = stack.back();
    stack.pop_back();
    UserDir dir{path, {}};
    if (depth < 0) {
      for (int i = 0; i < spec.decoys_in_appdata; ++i) dir.files.push_back(decoy_name(path));
    } else {
      dir.files = make_files(path, spec.files_per_dir);
      tree.user_files += dir.files.size();
      if (dirname_of(path) == spec.root && spec.decoys_in_appdata >= 0) dir.files.push_back(decoy_name(path));
      if (depth > 0) {
        std::set<std::string> subs;
        while (static_cast<int>(subs.size()) < spec.fanout) {
          auto word = std::string(pick(rng, kDirWords));
          subs.insert(subs.contains(word) ? word + "_" + std::to_string(subs.size()) : word);
        }
        for (auto it = subs.rbegin(); it != subs.rend(); ++it) stack.push_back({path + "/" + *it, depth - 1});
      }
    }
    std::sort(dir.files.begin(), dir.files.end());
    dir.files.erase(std::unique(dir.files.begin(), dir.files.end()), dir.files.end());
    for (const auto& f : dir.files) {
      if (f.find("/00_") != std::string::npos) tree.decoys.push_back(f);
    }
    tree.dirs.push_back(std::move(dir));
  }
  std::sort(tree.decoys.begin(), tree.decoys.end());
  return tree;
}

DecoyRegistry simulated_registry(const std::vector<std::string>& decoys) {
  DecoyRegistry reg;
  for (const auto& d : decoys) reg.add(d, {sha256_hex(d), 0, DecoyKind::Document});
  return reg;
}

void validate(const ScenarioSpec& spec) {
  const auto& t = spec.tree;
  if (t.depth < 0 || t.depth > 8 || t.fanout < 1 || t.files_per_dir < 1 || t.extensions.empty() ||
      t.decoys_in_appdata < 0) {
    throw Error(ErrorCode::BadSpec, "invalid target tree");
  }
  if (const auto* rs = std::get_if<RansomwareSpec>(&spec.kind)) {
    if (rs->mode < 1 || rs->mode > 6) throw Error(ErrorCode::BadSpec, "mode must be 1..6");
    if (!(rs->files_per_second > 0)) throw Error(ErrorCode::BadSpec, "files_per_second must be > 0");
    if (rs->note_every_k_dirs < 0) throw Error(ErrorCode::BadSpec, "note_every_k_dirs must be >= 0");
  } else {
    const auto& bs = std::get<BenignSpec>(spec.kind);
    if (!(bs.ops_per_second > 0)) throw Error(ErrorCode::BadSpec, "ops_per_second must be > 0");
    if (!(bs.duration_s > 0)) throw Error(ErrorCode::BadSpec, "duration_s must be > 0");
  }
}

ScenarioSpec scenario_for_kind(std::string_view kind) {
  ScenarioSpec spec;
  if (kind.size() == 2 && (kind[0] == 'm' || kind[0] == 'M') && kind[1] >= '1' && kind[1] <= '6') {
    RansomwareSpec rs;
    rs.mode = kind[1] - '0';
    spec.kind = rs;
    return spec;
  }
  auto profile = parse_benign_profile(kind);
  if (!profile) throw Error(ErrorCode::BadSpec, "unknown scenario kind '" + std::string(kind) + "'");
  BenignSpec bs;
  bs.profile = *profile;
  spec.kind = bs;
  return spec;
}

ScenarioSpec parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadSpec, e.what());
  }
  try {
    ScenarioSpec spec = scenario_for_kind(j.at("kind").get<std::string>());
    spec.seed = j.value("seed", spec.seed);
    spec.pid = j.value("pid", spec.pid);
    spec.pid_name = j.value("pid_name", spec.pid_name);
    spec.start_time = j.value("start_time", spec.start_time);
    if (auto* rs = std::get_if<RansomwareSpec>(&spec.kind)) {
      rs->files_per_second = j.value("files_per_second", rs->files_per_second);
      rs->note_every_k_dirs = j.value("note_every_k_dirs", rs->note_every_k_dirs);
      rs->avoid_decoys = j.value("avoid_decoys", rs->avoid_decoys);
      rs->max_files = j.value("max_files", rs->max_files);
    } else {
      auto& bs = std::get<BenignSpec>(spec.kind);
      bs.ops_per_second = j.value("ops_per_second", bs.ops_per_second);
      bs.duration_s = j.value("duration_s", bs.duration_s);
      bs.touch_decoys = j.value("touch_decoys", bs.touch_decoys);
    }
    if (j.contains("tree")) {
      const auto& t = j["tree"];
      auto& tree = spec.tree;
      tree.root = t.value("root", tree.root);
      tree.depth = t.value("depth", tree.depth);
      tree.fanout = t.value("fanout", tree.fanout);
      tree.files_per_dir = t.value("files_per_dir", tree.files_per_dir);
      tree.extensions = t.value("extensions", tree.extensions);
      tree.decoys_in_appdata = t.value("decoys_in_appdata", tree.decoys_in_appdata);
    }
    validate(spec);
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadSpec, e.what());
  }
}

GeneratedTrace generate(const ScenarioSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  UserTree tree = build_user_tree(spec.tree, spec.seed);

  GeneratedTrace out;
  out.decoys = tree.decoys;
  out.truth.pid = spec.pid;
  out.truth.target_files = tree.user_files;
  if (const auto* rs = std::get_if<RansomwareSpec>(&spec.kind)) {
    out.truth.ransomware = true;
    out.truth.mode = rs->mode;
    out.truth.kind = "M" + std::to_string(rs->mode);
    out.truth.pid_name = spec.pid_name.empty() ? std::string(pick(rng, kRansomNames)) : spec.pid_name;
    generate_ransomware(spec, *rs, tree, rng, out);
  } else {
    const auto& bs = std::get<BenignSpec>(spec.kind);
    out.truth.kind = std::string(to_string(bs.profile));
    out.truth.pid_name = spec.pid_name.empty() ? std::string(default_benign_name(bs.profile)) : spec.pid_name;
    BenignGenerator(spec, bs, tree, rng, out).run();
  }
  return out;
}

GeneratedTrace merge_traces(const std::vector<GeneratedTrace>& traces) {
  GeneratedTrace out;
  std::set<std::string> decoys;
  for (const auto& t : traces) {
    out.events.insert(out.events.end(), t.events.begin(), t.events.end());
    out.note_texts.insert(t.note_texts.begin(), t.note_texts.end());
    decoys.insert(t.decoys.begin(), t.decoys.end());
  }
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const FileEvent& a, const FileEvent& b) { return a.time < b.time; });
  out.decoys.assign(decoys.begin(), decoys.end());
  out.truth.kind = "mixed";
  return out;
}

void write_trace_dir(const GeneratedTrace& trace, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "trace.jsonl", std::ios::binary | std::ios::trunc);
    write_event_log(out, trace.events);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write trace");
  }
  const auto& g = trace.truth;
  json encrypted = json::array();
  for (const auto& e : g.encrypted) encrypted.push_back({{"path", e.path}, {"time", e.time}});
  json truth = {{"pid", g.pid},
                {"pid_name", g.pid_name},
                {"label", g.ransomware ? "ransomware" : "benign"},
                {"kind", g.kind},
                {"mode", g.mode},
                {"target_files", g.target_files},
                {"notes", g.notes},
                {"decoy_touches", g.decoy_touches},
                {"encrypted", std::move(encrypted)}};
  write_text(dir / "ground_truth.json", truth.dump(1) + "\n");
  json notes = json::object();
  for (const auto& [path, text] : trace.note_texts) notes[path] = text;
  write_text(dir / "notes.json", notes.dump(1) + "\n");
  write_text(dir / "decoys.json", simulated_registry(trace.decoys).to_json());
}

CorpusWindow window_from_trace(const GeneratedTrace& trace, Micros trigger, int slice, const CorpusOptions& options) {
  const auto width = static_cast<Micros>(std::llround(options.window_s * 1e6));
  CorpusWindow w;
  w.window = window_events(trace.events, trace.truth.pid, trigger + slice * width, width, TriggerSource::DecoyTouch);
  w.window.pid_name = trace.truth.pid_name;
  w.ransomware = trace.truth.ransomware;
  w.kind = trace.truth.kind;
  return w;
}

std::vector<CorpusWindow> build_corpus(std::size_t n_ransom, std::size_t n_benign, std::uint64_t seed,
                                       const CorpusOptions& options) {
  std::mt19937_64 rng(seed);
  std::vector<CorpusWindow> corpus;
  const int slices = std::max(options.slices, 1);
  const double span_s = options.window_s * slices;

  for (std::size_t i = 0; i < n_ransom; ++i) {
    ScenarioSpec spec;
    RansomwareSpec rs;
    rs.mode = static_cast<int>(i % 6) + 1;
    rs.files_per_second = log_uniform(rng, 20, 400);
    static constexpr std::array<int, 4> note_k = {0, 1, 2, 5};
    rs.note_every_k_dirs = pick(rng, note_k);
    const int slice = static_cast<int>((i / 6) % static_cast<std::size_t>(slices));
    const double needed = rs.files_per_second * options.window_s * (slice + 1) * 1.3 + 10;
    rs.max_files = static_cast<std::size_t>(needed);
    spec.tree.depth = 2;
    spec.tree.fanout = 3;
    spec.tree.files_per_dir = std::max(3, static_cast<int>(std::ceil(needed / 78.0)));
    spec.kind = rs;
    spec.seed = rng();
    spec.pid = 1000 + static_cast<Pid>(i);
    auto trace = generate(spec);
    Micros trigger = trace.truth.decoy_touches.empty() ? 0 : trace.truth.decoy_touches.front();
    auto w = window_from_trace(trace, trigger, slice, options);
    w.seed = spec.seed;
    corpus.push_back(std::move(w));
  }

  const int n_profiles = options.include_zip ? kBenignProfileCount : kBenignProfileCount - 1;
  for (std::size_t i = 0; i < n_benign; ++i) {
    ScenarioSpec spec;
    BenignSpec bs;
    bs.profile = static_cast<BenignProfile>(i % static_cast<std::size_t>(n_profiles));
    bs.ops_per_second = log_uniform(rng, 5, 150);
    bs.touch_decoys = chance(rng, 0.5);
    bs.duration_s = span_s / 0.6 + 2;
    const int slice = static_cast<int>((i / static_cast<std::size_t>(n_profiles)) % static_cast<std::size_t>(slices));
    spec.kind = bs;
    spec.seed = rng();
    spec.pid = 5000 + static_cast<Pid>(i);
    auto trace = generate(spec);
    Micros trigger = trace.truth.decoy_touches.empty()
                         ? static_cast<Micros>(uniform(rng, 0.1, 0.4) * bs.duration_s * 1e6)
                         : trace.truth.decoy_touches.front();
    auto w = window_from_trace(trace, trigger, slice, options);
    w.seed = spec.seed;
    corpus.push_back(std::move(w));
  }
  return corpus;
}

void write_corpus(const std::vector<CorpusWindow>& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "windows.jsonl", std::ios::binary | std::ios::trunc);
  std::size_t ransom = 0;
  for (const auto& w : corpus) {
    out << window_to_json(w).dump() << '\n';
    ransom += w.ransomware ? 1 : 0;
  }
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write corpus");
  json manifest = {{"windows", corpus.size()}, {"ransomware", ransom}, {"benign", corpus.size() - ransom}};
  write_text(dir / "manifest.json", manifest.dump(1) + "\n");
}

std::vector<CorpusWindow> read_corpus(const fs::path& dir) {
  std::ifstream in(dir / "windows.jsonl", std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + (dir / "windows.jsonl").string());
  std::vector<CorpusWindow> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = json::parse(line);
      CorpusWindow w;
      w.kind = j.at("kind").get<std::string>();
      w.ransomware = j.at("label").get<int>() == 1;
      w.seed = j.value("seed", std::uint64_t{0});
      w.window.pid = j.at("pid").get<Pid>();
      w.window.pid_name = j.value("pid_name", "");
      w.window.window_start = j.at("window_start").get<Micros>();
      w.window.window_end = j.at("window_end").get<Micros>();
      w.window.trigger = TriggerSource::DecoyTouch;
      for (const auto& e : j.at("events")) w.window.events.push_back(parse_event_line(e.dump()));
      corpus.push_back(std::move(w));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedLine, "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

void write_note_corpus(const NoteCorpus& corpus, const fs::path& dir) {
  fs::create_directories(dir / "notes");
  fs::create_directories(dir / "benign");
  for (std::size_t i = 0; i < corpus.notes.size(); ++i) {
    write_text(dir / "notes" / ("note_" + pad(static_cast<int>(i), 4) + ".txt"), corpus.notes[i]);
  }
  for (std::size_t i = 0; i < corpus.benign.size(); ++i) {
    write_text(dir / "benign" / ("doc_" + pad(static_cast<int>(i), 4) + ".txt"), corpus.benign[i]);
  }
}

}  // namespace mdr
