// Shared fixtures for tests that need a trained model or a gene pool.
#pragma once

#include <vector>

#include "mdr/notes.hpp"
#include "mdr/simulator.hpp"
#include "mdr/training.hpp"

namespace mdr::test {

inline const BoostedForest& shared_model() {
  static const BoostedForest model = [] {
    auto corpus = build_corpus(300, 300, 1);
    return train_classifier(corpus);
  }();
  return model;
}

inline const GenePool& shared_pool() {
  static const GenePool pool = [] {
    std::vector<TokenizedNote> notes;
    for (const auto& t : build_note_corpus(200, 0, 1).notes) notes.push_back(tokenize(t));
    return build_pool(notes);
  }();
  return pool;
}

}  // namespace mdr::test
