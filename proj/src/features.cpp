#include "mdr/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "mdr/error.hpp"

namespace mdr {

namespace {

std::string_view stem_of(std::string_view path) {
  auto base = basename_of(path);
  auto dot = base.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return path;
  return path.substr(0, path.size() - (base.size() - dot));
}

struct ShadowFile {
  std::string ext;
  bool exists = false;
};

TypeChange type_change(const std::set<std::string>& before, const std::set<std::string>& after) {
  if (after.size() > before.size()) return TypeChange::Grown;
  if (after.size() < before.size()) return TypeChange::Shrunk;
  return after == before ? TypeChange::Unchanged : TypeChange::Churn;
}

// Pairs every created path with an unused original from `originals` sharing
// its stem. Sorted iteration makes the pairing independent of event order.
std::vector<std::string> pair_created(const std::set<std::string>& created, const std::set<std::string>& originals) {
  std::map<std::string_view, std::vector<std::string_view>> by_stem;
  for (const auto& o : originals) by_stem[stem_of(o)].push_back(o);
  std::set<std::string_view> used;
  std::vector<std::string> new_exts;
  for (const auto& n : created) {
    std::string_view partner;
    std::string_view direct = stem_of(n);
    if (direct != n && originals.contains(std::string(direct)) && !used.contains(direct)) {
      partner = *originals.find(std::string(direct));
    } else if (auto it = by_stem.find(direct); it != by_stem.end()) {
      for (auto cand : it->second) {
        if (cand != n && !used.contains(cand)) {
          partner = cand;
          break;
        }
      }
    }
    if (partner.empty()) continue;
    used.insert(partner);
    new_exts.push_back(extension_of(n));
  }
  return new_exts;
}

}  // namespace

std::array<double, kExpertDims> FeatureVector::exported() const {
  return {static_cast<double>(n_create),
          static_cast<double>(n_delete),
          static_cast<double>(n_renamed),
          mode_onehot[0],
          mode_onehot[1],
          mode_onehot[2],
          mode_onehot[3],
          rtype,
          rtype_change,
          static_cast<double>(max_n_file),
          static_cast<double>(n_folder),
          r_file};
}

FeatureVector extract_features(const ProcessWindow& window) {
  FeatureVector fv;
  std::unordered_map<std::string, ShadowFile> shadow;
  std::set<std::string> before;
  std::set<std::string> deleted_types;
  std::set<std::string> created_types;
  std::map<std::string_view, std::map<std::string_view, std::uint64_t>> creates_by_name;  // name -> dir -> n

  auto touch = [&](const std::string& path, std::string ext, bool pre_existing) -> ShadowFile& {
    auto [it, fresh] = shadow.try_emplace(path);
    if (fresh) {
      it->second.ext = std::move(ext);
      if (pre_existing) before.insert(it->second.ext);
    }
    return it->second;
  };

  for (const auto& e : window.events) {
    switch (e.operation) {
      case Operation::Create:
        ++fv.n_create;
        created_types.insert(e.file_type);
        ++creates_by_name[basename_of(e.file_name)][dirname_of(e.file_name)];
        touch(e.file_name, e.file_type, false).exists = true;
        break;
      case Operation::Delete:
        ++fv.n_delete;
        deleted_types.insert(e.file_type);
        touch(e.file_name, e.file_type, true).exists = false;
        break;
      case Operation::Rename:
        ++fv.n_renamed;
        if (e.old_file_name) {
          touch(*e.old_file_name, extension_of(*e.old_file_name), true).exists = false;
          touch(e.file_name, e.file_type, false).exists = true;
        } else {
          touch(e.file_name, e.file_type, true).exists = true;
        }
        break;
      case Operation::Write:
      case Operation::Read:
      case Operation::Overwrite:
      case Operation::Smash:
        touch(e.file_name, e.file_type, true).exists = true;
        break;
    }
  }

  std::set<std::string> after;
  for (const auto& [_, f] : shadow) {
    if (f.exists) after.insert(f.ext);
  }

  fv.ntype_before = before.size();
  fv.ntype_after = after.size();
  fv.ntype_change = static_cast<std::int64_t>(fv.ntype_after) - static_cast<std::int64_t>(fv.ntype_before);
  if (!before.empty() || !after.empty()) fv.mode_onehot[static_cast<std::size_t>(type_change(before, after))] = 1.0;

  fv.ntype_del = deleted_types.size();
  fv.ntype_create = created_types.size();
  fv.rtype = fv.ntype_before ? static_cast<double>(fv.ntype_after) / static_cast<double>(fv.ntype_before) : 0.0;
  fv.rtype_change = fv.ntype_create ? static_cast<double>(fv.ntype_del) / static_cast<double>(fv.ntype_create)
                                    : static_cast<double>(fv.ntype_del);

  for (const auto& [name, dirs] : creates_by_name) {
    std::uint64_t total = 0;
    for (const auto& [_, n] : dirs) total += n;
    if (total > fv.max_n_file || (total == fv.max_n_file && dirs.size() > fv.n_folder)) {
      fv.max_n_file = total;
      fv.n_folder = dirs.size();
    }
  }
  fv.r_file = fv.n_folder ? static_cast<double>(fv.max_n_file) / static_cast<double>(fv.n_folder) : 0.0;
  return fv;
}

std::string_view to_string(IoFamily family) noexcept {
  switch (family) {
    case IoFamily::None: return "None";
    case IoFamily::Overwrite: return "Overwrite";
    case IoFamily::CreateDelete: return "CreateDelete";
    case IoFamily::CreateSmash: return "CreateSmash";
  }
  return "None";
}

std::string_view to_string(SuffixStyle style) noexcept {
  switch (style) {
    case SuffixStyle::None: return "None";
    case SuffixStyle::Uniform: return "Uniform";
    case SuffixStyle::Random: return "Random";
  }
  return "None";
}

std::string mode_name(int mode) { return mode >= 1 && mode <= 6 ? "M" + std::to_string(mode) : "None"; }

EncryptionMode classify_mode(const ProcessWindow& window, const ModeParams& params) {
  std::set<std::string> overwritten, created, deleted, smashed;
  std::map<std::string, std::string> renamed_to;
  for (const auto& e : window.events) {
    switch (e.operation) {
      case Operation::Overwrite: overwritten.insert(e.file_name); break;
      case Operation::Create: created.insert(e.file_name); break;
      case Operation::Delete: deleted.insert(e.file_name); break;
      case Operation::Smash: smashed.insert(e.file_name); break;
      case Operation::Rename:
        if (e.old_file_name) renamed_to[*e.old_file_name] = e.file_name;
        break;
      default: break;
    }
  }

  std::vector<std::string> ow_exts;
  for (const auto& p : overwritten) {
    auto it = renamed_to.find(p);
    ow_exts.push_back(extension_of(it == renamed_to.end() ? p : it->second));
  }
  std::array<std::vector<std::string>, 3> families{std::move(ow_exts), pair_created(created, deleted),
                                                   pair_created(created, smashed)};

  std::size_t best = 0;
  for (std::size_t i = 1; i < families.size(); ++i) {
    if (families[i].size() > families[best].size()) best = i;
  }
  EncryptionMode mode;
  mode.transformed_files = families[best].size();
  if (mode.transformed_files < std::max<std::size_t>(params.min_files, 1)) return mode;

  std::map<std::string, std::size_t> ext_counts;
  std::size_t top = 0;
  for (const auto& ext : families[best]) top = std::max(top, ++ext_counts[ext]);
  bool uniform = static_cast<double>(top) >= params.uniform_share * static_cast<double>(mode.transformed_files);

  mode.io_family = static_cast<IoFamily>(best + 1);
  mode.suffix_style = uniform ? SuffixStyle::Uniform : SuffixStyle::Random;
  mode.mode = static_cast<int>(best) * 2 + (uniform ? 1 : 2);
  return mode;
}

std::vector<FeatureHistogram> feature_report(std::span<const LabeledFeatures> vectors, std::size_t bins) {
  std::size_t n_ransom = 0;
  for (const auto& v : vectors) n_ransom += v.ransomware ? 1 : 0;
  if (n_ransom == 0 || n_ransom == vectors.size()) {
    throw Error(ErrorCode::DegenerateLabels, "feature report needs both classes");
  }
  if (bins == 0) bins = 1;
  const double n_benign = static_cast<double>(vectors.size() - n_ransom);

  std::vector<FeatureHistogram> report;
  for (std::size_t j = 0; j < kExpertDims; ++j) {
    FeatureHistogram h;
    h.name = kFeatureNames[j];
    double lo = vectors[0].values[j], hi = lo;
    for (const auto& v : vectors) {
      lo = std::min(lo, v.values[j]);
      hi = std::max(hi, v.values[j]);
    }
    std::size_t nb = hi > lo ? bins : 1;
    for (std::size_t b = 0; b <= nb; ++b) {
      h.edges.push_back(nb == 1 ? (b == 0 ? lo : hi) : lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(nb));
    }
    h.benign.assign(nb, 0);
    h.ransomware.assign(nb, 0);
    for (const auto& v : vectors) {
      std::size_t b = 0;
      if (nb > 1) {
        b = static_cast<std::size_t>((v.values[j] - lo) / (hi - lo) * static_cast<double>(nb));
        b = std::min(b, nb - 1);
      }
      (v.ransomware ? h.ransomware : h.benign)[b]++;
    }
    double tv = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      tv += std::abs(static_cast<double>(h.benign[b]) / n_benign -
                     static_cast<double>(h.ransomware[b]) / static_cast<double>(n_ransom));
    }
    h.separation = tv / 2.0;
    report.push_back(std::move(h));
  }
  return report;
}

void write_report_csv(std::ostream& out, std::span<const FeatureHistogram> report) {
  out << "feature,bin,lo,hi,benign,ransomware,separation\n";
  for (const auto& h : report) {
    for (std::size_t b = 0; b < h.benign.size(); ++b) {
      out << h.name << ',' << b << ',' << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.benign[b] << ','
          << h.ransomware[b] << ',' << h.separation << '\n';
    }
  }
}

}  // namespace mdr
