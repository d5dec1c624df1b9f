// Monitoring -> detection -> response orchestration.
//
// Every event passes the cheap monitors (decoy registry, ransom-note scoring of
// dropped text files). Only a process that fires one of them is buffered and
// classified: its monitoring window is split into fixed slides, each slide is
// classified when it ends, and the first positive slide yields a High alert
// with a simulated termination. A window with no positive slide ends in a Low
// alert with TrackOnly.
#pragma once

#include <algorithm>
#include <cmath>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mdr/decoy.hpp"
#include "mdr/event_model.hpp"
#include "mdr/gbdt.hpp"
#include "mdr/notes.hpp"

namespace mdr {

struct PipelineConfig {
  Micros window_total = 3 * kMicrosPerSecond;
  Micros slide = 1 * kMicrosPerSecond;
  double decision_threshold = 0.5;
  double tau_sim = kDefaultTauSim;
  std::size_t max_note_bytes = 1 << 20;
};

/// Returns the current content of a file, if available.
using ContentProvider = std::function<std::optional<std::string>(const std::string& path)>;

/// Files worth scoring as possible ransom notes.
bool is_note_candidate(std::string_view path);

struct Metrics {
  std::uint64_t events = 0;
  std::uint64_t triggers = 0;
  std::uint64_t decoy_triggers = 0;
  std::uint64_t note_triggers = 0;
  std::uint64_t notes_scored = 0;
  std::uint64_t windows_opened = 0;
  std::uint64_t classifier_calls = 0;
  std::map<std::string, std::uint64_t> alerts_by_level;  // "Low", "High"
  Micros decision_latency_p50 = 0;
  Micros decision_latency_p99 = 0;
  double inference_ms_p50 = 0;
  double inference_ms_p99 = 0;
  double wall_seconds = 0;
  double events_per_second = 0;
};

std::string metrics_to_json(const Metrics& m);

/// Nearest-rank percentile (q in (0, 1]); 0 for an empty input.
template <typename T>
T nearest_rank(std::vector<T> values, double q) {
  if (values.empty()) return T{};
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

class Engine {
 public:
  Engine(const DecoyRegistry& registry, const GenePool* pool, const BoostedForest& model, PipelineConfig config = {},
         ContentProvider contents = {});

  /// Events must arrive in non-decreasing time order.
  void process(const FileEvent& event);
  /// Closes every slide that ends at or before `now`.
  void advance_to(Micros now);
  /// Runs every open window to completion.
  void finish();

  std::function<void(const Alert&)> on_alert;

  const std::vector<Alert>& alerts() const noexcept { return alerts_; }
  /// Counters plus latency percentiles; wall time is filled by the caller.
  Metrics metrics() const;
  bool monitoring(Pid pid) const;
  bool terminated(Pid pid) const;

 private:
  enum class State : std::uint8_t { Idle, Monitoring, Terminated };
  struct PidState {
    State state = State::Idle;
    Trigger trigger;
    Micros window_start = 0;
    int slide_index = 0;
    std::vector<FileEvent> buffer;
    ThreatLevelKind level = ThreatLevelKind::None;
  };

  std::optional<Trigger> note_trigger(const FileEvent& event);
  void open_window(PidState& st, const Trigger& trigger);
  void close_slide(Pid pid, Micros deadline);
  void emit(PidState& st, Alert alert);

  const DecoyRegistry& registry_;
  const GenePool* pool_;
  const BoostedForest& model_;
  PipelineConfig config_;
  ContentProvider contents_;

  std::unordered_map<Pid, PidState> pids_;
  using Deadline = std::pair<Micros, Pid>;
  std::priority_queue<Deadline, std::vector<Deadline>, std::greater<>> deadlines_;
  std::unordered_map<std::string, double> note_scores_;
  std::vector<Alert> alerts_;
  std::vector<double> inference_ms_;
  Metrics counters_;
};

struct ReplayResult {
  std::vector<Alert> alerts;
  Metrics metrics;
};

ReplayResult run_replay(std::span<const FileEvent> events, const DecoyRegistry& registry, const GenePool* pool,
                        const BoostedForest& model, const PipelineConfig& config = {},
                        ContentProvider contents = {});

/// Content provider backed by a {"path": "text"} JSON object (as written by
/// the simulator's notes.json).
ContentProvider note_contents_from_json(const std::filesystem::path& file);

/// Live mode: an inotify watcher feeds the engine; a timer closes slides on
/// wall-clock time. Events carry pid 0 (inotify does not report the writer).
class LiveSession {
 public:
  LiveSession(const DecoyRegistry& registry, std::vector<std::filesystem::path> dirs, const GenePool* pool,
              const BoostedForest& model, PipelineConfig config = {});
  ~LiveSession();
  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  /// Throws Error(WatchUnavailable).
  void start();
  void stop();
  std::function<void(const Alert&)> on_alert;

  std::vector<Alert> alerts() const;
  Metrics metrics() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mdr
