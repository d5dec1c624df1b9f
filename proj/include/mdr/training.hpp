// Corpus windows -> classifier.
#pragma once

#include <span>

#include "mdr/featurize.hpp"
#include "mdr/gbdt.hpp"
#include "mdr/simulator.hpp"

namespace mdr {

Dataset windows_to_dataset(std::span<const CorpusWindow> windows, std::size_t dims = kDefaultEmbeddingDim,
                           std::uint64_t seed = kDefaultHashSeed);

/// Featurizes, fits, and stamps the embedding contract into the model.
BoostedForest train_classifier(std::span<const CorpusWindow> windows, const BoostParams& params = {},
                               std::size_t dims = kDefaultEmbeddingDim, std::uint64_t seed = kDefaultHashSeed,
                               FitReport* report = nullptr);

}  // namespace mdr
