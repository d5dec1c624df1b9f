#include "mdr/training.hpp"

namespace mdr {

Dataset windows_to_dataset(std::span<const CorpusWindow> windows, std::size_t dims, std::uint64_t seed) {
  Dataset data(feature_width(dims));
  for (const auto& w : windows) data.add_row(featurize(w.window, dims, seed), w.ransomware ? 1.0 : 0.0);
  return data;
}

BoostedForest train_classifier(std::span<const CorpusWindow> windows, const BoostParams& params, std::size_t dims,
                               std::uint64_t seed, FitReport* report) {
  auto model = fit(windows_to_dataset(windows, dims, seed), params, report);
  model.embedding_dim = static_cast<std::uint32_t>(dims);
  model.hash_seed = seed;
  return model;
}

}  // namespace mdr
