// Expert behavior features over one ProcessWindow and the encryption-mode
// classifier.
//
// Type-set features are computed over an in-window shadow of the files the
// process touched:
//   - before set: extensions of files that existed before the process touched
//     them (first event on the path is not a Create; the source of a Rename),
//   - after set: extensions of touched paths that still exist when the window
//     ends (Create/Write/Overwrite/Smash/Read => exists, Delete => gone,
//     Rename moves existence from the old to the new path).
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdr/event_model.hpp"

namespace mdr {

inline constexpr std::size_t kExpertDims = 12;

/// Fixed export order. Part of the model contract.
inline constexpr std::array<std::string_view, kExpertDims> kFeatureNames = {
    "n_create",          "n_delete",        "n_renamed",     "type_unchanged", "type_grown",
    "type_shrunk",       "type_churn",      "rtype",         "rtype_change",   "max_n_file",
    "n_folder",          "r_file"};

/// Shape of the change between the before and after type sets.
enum class TypeChange : std::uint8_t { Unchanged, Grown, Shrunk, Churn };

struct FeatureVector {
  std::uint64_t n_create = 0;
  std::uint64_t n_delete = 0;
  std::uint64_t n_renamed = 0;
  std::uint64_t ntype_before = 0;
  std::uint64_t ntype_after = 0;
  std::int64_t ntype_change = 0;
  std::uint64_t ntype_del = 0;
  std::uint64_t ntype_create = 0;
  // One-hot over TypeChange; all zero when both type sets are empty.
  std::array<double, 4> mode_onehot{};
  double rtype = 0;
  double rtype_change = 0;
  std::uint64_t max_n_file = 0;
  std::uint64_t n_folder = 0;
  double r_file = 0;

  std::array<double, kExpertDims> exported() const;
  bool operator==(const FeatureVector&) const = default;
};

FeatureVector extract_features(const ProcessWindow& window);

enum class IoFamily : std::uint8_t { None, Overwrite, CreateDelete, CreateSmash };
enum class SuffixStyle : std::uint8_t { None, Uniform, Random };

struct EncryptionMode {
  int mode = 0;  // 1..6, 0 = none
  IoFamily io_family = IoFamily::None;
  SuffixStyle suffix_style = SuffixStyle::None;
  std::size_t transformed_files = 0;
  bool operator==(const EncryptionMode&) const = default;
};

struct ModeParams {
  std::size_t min_files = 5;
  double uniform_share = 0.8;
};

std::string_view to_string(IoFamily family) noexcept;
std::string_view to_string(SuffixStyle style) noexcept;
/// "M1".."M6" or "None".
std::string mode_name(int mode);

/// Overwrite ops => Overwrite family; Create paired with Delete of the same
/// stem => CreateDelete; Create paired with Smash => CreateSmash. The family
/// with the most transformed files wins (ties: Overwrite, CreateDelete,
/// CreateSmash). Uniform iff >= uniform_share of the transformed files' new
/// extensions are one extension.
EncryptionMode classify_mode(const ProcessWindow& window, const ModeParams& params = {});

// ---------------------------------------------------------------------------

struct LabeledFeatures {
  std::array<double, kExpertDims> values{};
  bool ransomware = false;
};

struct FeatureHistogram {
  std::string_view name;
  std::vector<double> edges;  // bins + 1
  std::vector<std::uint64_t> benign;
  std::vector<std::uint64_t> ransomware;
  double separation = 0;  // total variation distance of the class histograms
};

/// Class-conditional histograms per exported feature.
/// Throws Error(DegenerateLabels) unless both classes are present.
std::vector<FeatureHistogram> feature_report(std::span<const LabeledFeatures> vectors, std::size_t bins = 10);
void write_report_csv(std::ostream& out, std::span<const FeatureHistogram> report);

}  // namespace mdr
