// Decoy file generation, deployment and the registry that answers
// "is this path a decoy".
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "mdr/event_model.hpp"

namespace mdr {

enum class DecoyKind : std::uint8_t { Document, Image, Spreadsheet };
enum class NameStyle : std::uint8_t { MimicNeighbors, Dictionary };

std::string_view to_string(DecoyKind kind) noexcept;
/// Throws Error(UnsupportedKind) for anything but document/image/spreadsheet.
DecoyKind parse_decoy_kind(std::string_view token);

struct GeneratedDecoy {
  std::string file_name;
  std::string content;
};

/// Builds a plausible decoy. MimicNeighbors reuses a neighbor's token prefix
/// and extension with a numeric variation that never collides with a
/// neighbor; it falls back to Dictionary when there are no neighbors.
/// Output is a pure function of the arguments.
GeneratedDecoy generate_decoy(DecoyKind kind, NameStyle style,
                              const std::vector<std::string>& neighbor_names, std::uint64_t seed);

struct DecoySpec {
  std::filesystem::path directory;
  int count = 1;
  std::vector<DecoyKind> kinds{DecoyKind::Document};
  NameStyle name_style = NameStyle::MimicNeighbors;
};

struct DeployOptions {
  bool automatic = false;
  // Directories ransomware tends to enumerate first. Automatic mode deploys
  // there before the user directory.
  std::vector<std::filesystem::path> early_traversal_dirs;
  std::uint64_t seed = 0x5eed;
  std::int64_t deployed_at = 0;  // seconds; caller supplies the clock
};

/// Linux analog of the per-user application-data folders.
std::vector<std::filesystem::path> default_early_traversal_dirs();

class DecoyRegistry {
 public:
  struct Entry {
    std::string digest;  // sha256 hex of the deployed content
    std::int64_t deployed_at = 0;
    DecoyKind kind = DecoyKind::Document;
    bool operator==(const Entry&) const = default;
  };

  DecoyRegistry() = default;
  DecoyRegistry(const DecoyRegistry& other);
  DecoyRegistry& operator=(const DecoyRegistry& other);

  bool contains(std::string_view path) const;
  std::optional<Entry> find(std::string_view path) const;
  void add(std::string path, Entry entry);
  bool remove(std::string_view path);
  std::size_t size() const;
  std::map<std::string, Entry, std::less<>> snapshot() const;

  std::string to_json() const;
  static DecoyRegistry from_json(std::string_view text);
  void save(const std::filesystem::path& file) const;
  static DecoyRegistry load(const std::filesystem::path& file);

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry, std::less<>> entries_;
};

/// Writes decoys and registers them. Idempotent by path: decoys already
/// registered in a target directory count toward `spec.count`. On failure every
/// file written by this call is removed, the registry is left untouched, and
/// Error(IoFailure) is thrown.
std::vector<std::string> deploy(const DecoySpec& spec, DecoyRegistry& registry,
                                const DeployOptions& options = {});

/// DecoyTouch iff the event touches a registered path (file_name, or
/// old_file_name for renames) with a modifying operation. Reads never fire.
std::optional<Trigger> check_event(const FileEvent& event, const DecoyRegistry& registry);

enum class DecoyStatus : std::uint8_t { Intact, Modified, Missing };
std::string_view to_string(DecoyStatus status) noexcept;

struct DecoyCheck {
  std::string path;
  DecoyStatus status;
};

/// Re-hashes every registered decoy on disk.
std::vector<DecoyCheck> verify(const DecoyRegistry& registry);

}  // namespace mdr
