// Synthetic labeled traces: ransomware in the six encryption modes and a set
// of benign workloads, plus ransom-note and look-alike benign text.
//
// Paths are Windows-like ("C:/Users/user/...") because that is where the
// behaviors being modeled live. Output is deterministic for a given seed on a
// given standard library.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "mdr/decoy.hpp"
#include "mdr/event_model.hpp"

namespace mdr {

/// Encryption throughput of LockBit as reported by Splunk's encryption-speed
/// study: about 100k files in 5m50s.
inline constexpr double kLockBitFilesPerSecond = 286.0;

struct TargetTree {
  std::string root = "C:/Users/user";
  int depth = 2;            // subdirectory levels below each top-level folder
  int fanout = 3;           // subdirectories per directory
  int files_per_dir = 6;
  std::vector<std::string> extensions = {"docx", "xlsx", "pdf", "jpg", "png", "txt", "pptx", "csv", "mp4", "zip"};
  int decoys_in_appdata = 2;
};

struct RansomwareSpec {
  int mode = 1;  // 1..6
  double files_per_second = 120;
  int note_every_k_dirs = 1;  // 0 disables notes
  bool avoid_decoys = false;
  std::size_t max_files = 0;  // 0 = the whole tree
};

enum class BenignProfile : std::uint8_t {
  Indexer,
  OfficeSave,
  Installer,
  Backup,
  Cleanup,
  Organizer,
  Downloader,
  Zip,  // per-file compress + delete; excluded from training corpora by default
};

inline constexpr int kBenignProfileCount = 8;

std::string_view to_string(BenignProfile profile) noexcept;
std::optional<BenignProfile> parse_benign_profile(std::string_view name);

struct BenignSpec {
  BenignProfile profile = BenignProfile::Indexer;
  double ops_per_second = 40;
  double duration_s = 10;
  bool touch_decoys = false;
};

struct ScenarioSpec {
  std::variant<RansomwareSpec, BenignSpec> kind;
  std::uint64_t seed = 1;
  TargetTree tree;
  Pid pid = 4242;
  std::string pid_name;  // empty = profile default
  Micros start_time = 0;
};

/// Throws Error(BadSpec) on invalid values.
void validate(const ScenarioSpec& spec);
/// JSON spec, e.g. {"kind":"m3","files_per_second":120,"seed":7,"tree":{...}}.
ScenarioSpec parse_scenario(std::string_view json);
/// "m1".."m6" or a benign profile name.
ScenarioSpec scenario_for_kind(std::string_view kind);

struct EncryptedFile {
  std::string path;
  Micros time = 0;
};

struct GroundTruth {
  Pid pid = 0;
  std::string pid_name;
  bool ransomware = false;
  std::string kind;  // "M1".."M6" or profile name
  int mode = 0;
  std::size_t target_files = 0;
  std::vector<EncryptedFile> encrypted;
  std::vector<std::string> notes;
  std::vector<Micros> decoy_touches;  // times of modifying ops on decoys
};

struct GeneratedTrace {
  std::vector<FileEvent> events;
  GroundTruth truth;
  std::map<std::string, std::string> note_texts;  // path -> dropped text
  std::vector<std::string> decoys;
};

struct UserDir {
  std::string path;
  std::vector<std::string> files;  // sorted; may include decoys
};

struct UserTree {
  std::vector<UserDir> dirs;  // traversal order
  std::vector<std::string> decoys;
  std::size_t user_files = 0;  // files that are not decoys

  bool is_decoy(std::string_view path) const;
  std::vector<std::string> files() const;  // non-decoy files in traversal order
};

/// Directory-first traversal in sorted order: each directory's files, then
/// its subdirectories. Decoys sit in AppData and one per top-level folder.
UserTree build_user_tree(const TargetTree& tree, std::uint64_t seed);

/// Registry describing the decoys of a simulated tree.
DecoyRegistry simulated_registry(const std::vector<std::string>& decoys);

GeneratedTrace generate(const ScenarioSpec& spec);

/// Events of several traces interleaved by time (stable in input order).
GeneratedTrace merge_traces(const std::vector<GeneratedTrace>& traces);

/// Writes trace.jsonl, ground_truth.json, notes.json and decoys.json into dir.
void write_trace_dir(const GeneratedTrace& trace, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Labeled window corpora.

struct CorpusWindow {
  ProcessWindow window;
  bool ransomware = false;
  std::string kind;
  std::uint64_t seed = 0;
};

struct CorpusOptions {
  double window_s = 1.0;
  int slices = 3;  // windows are taken at trigger + k * window_s, k < slices
  bool include_zip = false;
};

CorpusWindow window_from_trace(const GeneratedTrace& trace, Micros trigger, int slice, const CorpusOptions& options);

/// n_ransom ransomware windows cycling through M1..M6 and n_benign benign
/// windows cycling through the profiles.
std::vector<CorpusWindow> build_corpus(std::size_t n_ransom, std::size_t n_benign, std::uint64_t seed,
                                       const CorpusOptions& options = {});

void write_corpus(const std::vector<CorpusWindow>& corpus, const std::filesystem::path& dir);
std::vector<CorpusWindow> read_corpus(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Text.

/// Ransom note assembled from headline, threat, payment, offer and contact
/// sections drawn from synonym pools.
std::string generate_note(std::mt19937_64& rng);
/// Ordinary document that borrows the same vocabulary (IT notices, invoices,
/// security bulletins, licensing text).
std::string generate_benign_doc(std::mt19937_64& rng);

struct NoteCorpus {
  std::vector<std::string> notes;
  std::vector<std::string> benign;
};

NoteCorpus build_note_corpus(std::size_t n_notes, std::size_t n_benign, std::uint64_t seed);
void write_note_corpus(const NoteCorpus& corpus, const std::filesystem::path& dir);

}  // namespace mdr
