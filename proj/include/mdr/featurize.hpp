// Classifier input row: 12 expert features followed by the graph embedding.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdr/event_model.hpp"
#include "mdr/features.hpp"
#include "mdr/graph.hpp"

namespace mdr {

constexpr std::size_t feature_width(std::size_t dims) noexcept { return kExpertDims + dims; }

std::vector<double> featurize(const ProcessWindow& window, std::size_t dims = kDefaultEmbeddingDim,
                              std::uint64_t seed = kDefaultHashSeed);

/// kFeatureNames followed by "emb_0".."emb_{dims-1}".
std::vector<std::string> feature_columns(std::size_t dims);

}  // namespace mdr
