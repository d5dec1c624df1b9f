#include "mdr/featurize.hpp"

namespace mdr {

std::vector<double> featurize(const ProcessWindow& window, std::size_t dims, std::uint64_t seed) {
  auto expert = extract_features(window).exported();
  auto embedding = encode(build_graph(window), dims, seed);
  std::vector<double> row;
  row.reserve(feature_width(dims));
  row.insert(row.end(), expert.begin(), expert.end());
  row.insert(row.end(), embedding.values.begin(), embedding.values.end());
  return row;
}

std::vector<std::string> feature_columns(std::size_t dims) {
  std::vector<std::string> names(kFeatureNames.begin(), kFeatureNames.end());
  for (std::size_t i = 0; i < dims; ++i) names.push_back("emb_" + std::to_string(i));
  return names;
}

}  // namespace mdr
