#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "mdr/error.hpp"
#include "mdr/features.hpp"
#include "mdr/simulator.hpp"
#include "../oracles.hpp"

using namespace mdr;
using namespace mdr::oracle;

namespace {

ProcessWindow window_of(std::vector<FileEvent> events) {
  ProcessWindow w;
  w.pid = 1;
  w.window_end = kMicrosPerSecond * 1000;
  w.events = std::move(events);
  return w;
}

ProcessWindow trace_window(const GeneratedTrace& t) {
  return window_events(t.events, t.truth.pid, 0, 1000 * kMicrosPerSecond);
}

GeneratedTrace ransom_trace(int mode, std::uint64_t seed) {
  ScenarioSpec spec;
  RansomwareSpec r;
  r.mode = mode;
  r.max_files = 40;
  spec.kind = r;
  spec.seed = seed;
  return generate(spec);
}

}  // namespace

TEST(Features, EmptyWindow) {
  auto fv = extract_features(window_of({}));
  EXPECT_EQ(fv, FeatureVector{});
  for (double v : fv.exported()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(classify_mode(window_of({})).mode, 0);
}

TEST(Features, NotesSpreadAcrossFolders) {
  std::vector<FileEvent> ev;
  for (int i = 0; i < 5; ++i) {
    ev.push_back(make_event(i, 1, "p", Operation::Create, "C:/u/d" + std::to_string(i) + "/HOW_TO_DECRYPT.txt"));
  }
  auto fv = extract_features(window_of(ev));
  EXPECT_EQ(fv.max_n_file, 5u);
  EXPECT_EQ(fv.n_folder, 5u);
  EXPECT_DOUBLE_EQ(fv.r_file, 1.0);
  EXPECT_EQ(fv, naive(window_of(ev)));
}

TEST(Features, InstallerLogsInOneFolder) {
  std::vector<FileEvent> ev;
  for (int i = 0; i < 5; ++i) ev.push_back(make_event(i, 1, "setup.exe", Operation::Create, "C:/p/setup.log"));
  auto fv = extract_features(window_of(ev));
  EXPECT_EQ(fv.max_n_file, 5u);
  EXPECT_EQ(fv.n_folder, 1u);
  EXPECT_DOUBLE_EQ(fv.r_file, 5.0);
}

TEST(Features, DivisionSentinels) {
  // Only deletes: no created types, so rtype_change falls back to ntype_del.
  std::vector<FileEvent> ev = {make_event(0, 1, "p", Operation::Delete, "C:/a/x.tmp"),
                               make_event(1, 1, "p", Operation::Delete, "C:/a/y.log")};
  auto fv = extract_features(window_of(ev));
  EXPECT_EQ(fv.ntype_create, 0u);
  EXPECT_DOUBLE_EQ(fv.rtype_change, 2.0);
  EXPECT_DOUBLE_EQ(fv.rtype, 0.0);  // before has 2 types, after has none
  EXPECT_EQ(fv.ntype_before, 2u);
  EXPECT_EQ(fv.mode_onehot[static_cast<std::size_t>(TypeChange::Shrunk)], 1.0);

  // Only creates: nothing pre-existed.
  auto fv2 = extract_features(window_of({make_event(0, 1, "p", Operation::Create, "C:/a/n.txt")}));
  EXPECT_EQ(fv2.ntype_before, 0u);
  EXPECT_DOUBLE_EQ(fv2.rtype, 0.0);
  EXPECT_EQ(fv2.mode_onehot[static_cast<std::size_t>(TypeChange::Grown)], 1.0);
}

TEST(Features, MatchesNaiveRecountOnRandomWindows) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    auto w = window_of(random_events(rng, rng() % 60));
    auto fv = extract_features(w);
    ASSERT_EQ(fv, naive(w)) << "window " << i;
    EXPECT_EQ(fv.ntype_change,
              static_cast<std::int64_t>(fv.ntype_after) - static_cast<std::int64_t>(fv.ntype_before));
    double hot = 0;
    for (double v : fv.mode_onehot) hot += v;
    EXPECT_EQ(hot, (fv.ntype_before || fv.ntype_after) ? 1.0 : 0.0);
  }
}

TEST(Features, DuplicationInvariance) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 200; ++i) {
    auto base = random_events(rng, 1 + rng() % 40);
    std::vector<FileEvent> doubled;
    for (const auto& e : base) {
      doubled.push_back(e);
      doubled.push_back(e);
    }
    auto a = extract_features(window_of(base));
    auto b = extract_features(window_of(doubled));
    EXPECT_EQ(a.ntype_change, b.ntype_change);
    EXPECT_DOUBLE_EQ(a.rtype, b.rtype);
  }
  for (int mode = 1; mode <= 6; ++mode) {
    auto w = trace_window(ransom_trace(mode, 5));
    auto doubled = w;
    doubled.events.clear();
    for (const auto& e : w.events) {
      doubled.events.push_back(e);
      doubled.events.push_back(e);
    }
    EXPECT_EQ(classify_mode(w).suffix_style, classify_mode(doubled).suffix_style);
    EXPECT_EQ(extract_features(w).ntype_change, extract_features(doubled).ntype_change);
  }
}

TEST(Features, ModeMatchesSimulatorGroundTruth) {
  for (int mode = 1; mode <= 6; ++mode) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto t = ransom_trace(mode, seed);
      auto m = classify_mode(trace_window(t));
      EXPECT_EQ(m.mode, mode) << "seed " << seed;
      EXPECT_NE(m.io_family, IoFamily::None);
      EXPECT_NE(m.suffix_style, SuffixStyle::None);
    }
  }
  auto m1 = classify_mode(trace_window(ransom_trace(1, 3)));
  EXPECT_EQ(m1.io_family, IoFamily::Overwrite);
  EXPECT_EQ(m1.suffix_style, SuffixStyle::Uniform);
  auto m6 = classify_mode(trace_window(ransom_trace(6, 3)));
  EXPECT_EQ(m6.io_family, IoFamily::CreateSmash);
  EXPECT_EQ(m6.suffix_style, SuffixStyle::Random);
  EXPECT_EQ(mode_name(m6.mode), "M6");
}

TEST(Features, BenignEditorHasNoMode) {
  ScenarioSpec spec;
  spec.kind = BenignSpec{BenignProfile::OfficeSave, 40, 10, false};
  auto t = generate(spec);
  EXPECT_EQ(classify_mode(trace_window(t)).mode, 0);

  std::vector<FileEvent> ev;
  for (int i = 0; i < 20; ++i) {
    ev.push_back(make_event(2 * i, 1, "p", Operation::Read, "C:/d/report.docx"));
    ev.push_back(make_event(2 * i + 1, 1, "p", Operation::Write, "C:/d/report.docx"));
  }
  EXPECT_EQ(classify_mode(window_of(ev)).mode, 0);
}

TEST(Features, ModeIsOrderInvariant) {
  std::mt19937_64 rng(8);
  for (int mode = 1; mode <= 6; ++mode) {
    auto w = trace_window(ransom_trace(mode, 11));
    auto want = classify_mode(w);
    for (int k = 0; k < 10; ++k) {
      auto shuffled = w;
      std::shuffle(shuffled.events.begin(), shuffled.events.end(), rng);
      EXPECT_EQ(classify_mode(shuffled), want);
    }
  }
}

TEST(Features, ExportOrder) {
  FeatureVector fv;
  fv.n_create = 1;
  fv.n_delete = 2;
  fv.n_renamed = 3;
  fv.mode_onehot = {0, 0, 0, 1};
  fv.rtype = 4;
  fv.rtype_change = 5;
  fv.max_n_file = 6;
  fv.n_folder = 7;
  fv.r_file = 8;
  std::array<double, kExpertDims> want = {1, 2, 3, 0, 0, 0, 1, 4, 5, 6, 7, 8};
  EXPECT_EQ(fv.exported(), want);
  EXPECT_EQ(kFeatureNames[9], "max_n_file");
}

TEST(Features, ReportErrorsAndSeparation) {
  std::vector<LabeledFeatures> one_class(4);
  try {
    feature_report(one_class);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateLabels);
  }

  std::vector<LabeledFeatures> same;
  for (int i = 0; i < 6; ++i) {
    LabeledFeatures f;
    f.values.fill(static_cast<double>(i % 3));
    f.ransomware = i % 2 == 0;
    same.push_back(f);
    f.ransomware = !f.ransomware;
    same.push_back(f);
  }
  for (const auto& h : feature_report(same, 5)) {
    EXPECT_DOUBLE_EQ(h.separation, 0.0);
    EXPECT_EQ(h.edges.size(), h.benign.size() + 1);
  }

  auto corpus = build_corpus(60, 60, 3);
  std::vector<LabeledFeatures> vecs;
  for (const auto& c : corpus) vecs.push_back({extract_features(c.window).exported(), c.ransomware});
  auto report = feature_report(vecs, 10);
  ASSERT_EQ(report.size(), kExpertDims);
  double best = 0;
  for (const auto& h : report) {
    std::uint64_t nb = 0, nr = 0;
    for (auto c : h.benign) nb += c;
    for (auto c : h.ransomware) nr += c;
    EXPECT_EQ(nb, 60u);
    EXPECT_EQ(nr, 60u);
    best = std::max(best, h.separation);
  }
  EXPECT_GT(best, 0.5);

  std::ostringstream csv;
  write_report_csv(csv, report);
  EXPECT_EQ(csv.str().rfind("feature,bin,lo,hi,benign,ransomware,separation\n", 0), 0u);
}
