#include "mdr/pipeline.hpp"

#include <array>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mdr/error.hpp"
#include "mdr/featurize.hpp"
#include "mdr/live_watcher.hpp"

namespace mdr {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::array<std::string_view, 5> kNoteExtensions = {"txt", "html", "htm", "hta", "rtf"};

std::string format_score(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

}  // namespace

bool is_note_candidate(std::string_view path) {
  auto ext = extension_of(path);
  if (std::find(kNoteExtensions.begin(), kNoteExtensions.end(), ext) != kNoteExtensions.end()) return true;
  std::string base(basename_of(path));
  std::transform(base.begin(), base.end(), base.begin(), [](unsigned char c) { return std::tolower(c); });
  return base.find("readme") != std::string::npos;
}

std::string metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json j = {{"events", m.events},
                              {"triggers", m.triggers},
                              {"decoy_triggers", m.decoy_triggers},
                              {"note_triggers", m.note_triggers},
                              {"notes_scored", m.notes_scored},
                              {"windows_opened", m.windows_opened},
                              {"classifier_calls", m.classifier_calls},
                              {"alerts_by_level", m.alerts_by_level},
                              {"decision_latency_p50_us", m.decision_latency_p50},
                              {"decision_latency_p99_us", m.decision_latency_p99},
                              {"inference_ms_p50", m.inference_ms_p50},
                              {"inference_ms_p99", m.inference_ms_p99},
                              {"wall_seconds", m.wall_seconds},
                              {"events_per_second", m.events_per_second}};
  return j.dump(1);
}

Engine::Engine(const DecoyRegistry& registry, const GenePool* pool, const BoostedForest& model,
               PipelineConfig config, ContentProvider contents)
    : registry_(registry), pool_(pool), model_(model), config_(config), contents_(std::move(contents)) {
  if (config_.slide <= 0 || config_.window_total < config_.slide) {
    throw std::invalid_argument("slide must be positive and no longer than the window");
  }
  counters_.alerts_by_level = {{"Low", 0}, {"High", 0}};
}

std::optional<Trigger> Engine::note_trigger(const FileEvent& e) {
  if (!pool_ || !contents_ || e.operation != Operation::Write || !is_note_candidate(e.file_name)) return std::nullopt;
  auto cached = note_scores_.find(e.file_name);
  double score = 0;
  if (cached != note_scores_.end()) {
    score = cached->second;
  } else {
    auto text = contents_(e.file_name);
    if (text && text->size() <= config_.max_note_bytes && looks_like_text(*text)) {
      ++counters_.notes_scored;
      score = similarity(tokenize(*text), *pool_, config_.tau_sim).score;
    }
    note_scores_.emplace(e.file_name, score);
  }
  if (score < config_.tau_sim) return std::nullopt;
  return Trigger{TriggerSource::RansomNote, e.pid, e.pid_name, e.time, e.file_name, e.operation, score};
}

void Engine::open_window(PidState& st, const Trigger& trigger) {
  st.state = State::Monitoring;
  st.trigger = trigger;
  st.window_start = trigger.time;
  st.slide_index = 0;
  st.buffer.clear();
  ++counters_.windows_opened;
  deadlines_.push({trigger.time + config_.slide, trigger.pid});
}

void Engine::process(const FileEvent& e) {
  advance_to(e.time);
  ++counters_.events;

  std::optional<Trigger> trigger = check_event(e, registry_);
  if (trigger) {
    ++counters_.decoy_triggers;
  } else if ((trigger = note_trigger(e))) {
    ++counters_.note_triggers;
  }
  if (trigger) ++counters_.triggers;

  auto it = pids_.find(e.pid);
  if (it == pids_.end()) {
    if (!trigger) return;
    it = pids_.emplace(e.pid, PidState{}).first;
  }
  PidState& st = it->second;
  if (st.state == State::Terminated) return;
  if (st.state == State::Idle) {
    if (!trigger) return;
    open_window(st, *trigger);
  }
  st.buffer.push_back(e);
}

void Engine::advance_to(Micros now) {
  while (!deadlines_.empty() && deadlines_.top().first <= now) {
    auto [deadline, pid] = deadlines_.top();
    deadlines_.pop();
    close_slide(pid, deadline);
  }
}

void Engine::finish() { advance_to(std::numeric_limits<Micros>::max()); }

void Engine::close_slide(Pid pid, Micros deadline) {
  PidState& st = pids_.at(pid);
  if (st.state != State::Monitoring) return;

  ProcessWindow window;
  window.pid = pid;
  window.pid_name = st.trigger.pid_name;
  window.window_start = deadline - config_.slide;
  window.window_end = deadline;
  window.trigger = st.trigger.source;
  window.events = std::move(st.buffer);
  st.buffer.clear();

  auto t0 = Clock::now();
  auto row = featurize(window, model_.embedding_dim, model_.hash_seed);
  double p = model_.predict(row);
  inference_ms_.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  ++counters_.classifier_calls;

  const int slides = static_cast<int>(config_.window_total / config_.slide);
  Alert alert;
  alert.pid = pid;
  alert.pid_name = st.trigger.pid_name;
  alert.trigger_time = st.trigger.time;
  alert.evidence.push_back(std::string(to_string(st.trigger.source)) + ": " + st.trigger.path);
  if (st.trigger.source == TriggerSource::RansomNote) alert.evidence.push_back("note_score=" + format_score(st.trigger.score));

  if (p >= config_.decision_threshold) {
    alert.created_at = deadline;
    alert.threat = {ThreatLevelKind::High, st.trigger.source, p};
    alert.response_taken = ResponseAction::TerminateSimulated;
    alert.evidence.push_back("classifier p=" + format_score(p) + " slide " + std::to_string(st.slide_index + 1) + "/" +
                             std::to_string(slides));
    auto mode = classify_mode(window);
    if (mode.mode) alert.evidence.push_back("mode=" + mode_name(mode.mode));
    st.state = State::Terminated;
    emit(st, std::move(alert));
    return;
  }
  if (++st.slide_index < slides) {
    deadlines_.push({deadline + config_.slide, pid});
    return;
  }
  alert.created_at = deadline;
  alert.threat = {ThreatLevelKind::Low, st.trigger.source, p};
  alert.response_taken = ResponseAction::TrackOnly;
  alert.evidence.push_back("classifier negative on " + std::to_string(slides) + " slides, last p=" + format_score(p));
  st.state = State::Idle;
  emit(st, std::move(alert));
}

void Engine::emit(PidState& st, Alert alert) {
  st.level = std::max(st.level, alert.threat.level);
  ++counters_.alerts_by_level[std::string(to_string(alert.threat.level))];
  alerts_.push_back(std::move(alert));
  if (on_alert) on_alert(alerts_.back());
}

Metrics Engine::metrics() const {
  Metrics m = counters_;
  std::vector<Micros> latencies;
  for (const auto& a : alerts_) latencies.push_back(a.decision_latency());
  m.decision_latency_p50 = nearest_rank(latencies, 0.50);
  m.decision_latency_p99 = nearest_rank(latencies, 0.99);
  m.inference_ms_p50 = nearest_rank(inference_ms_, 0.50);
  m.inference_ms_p99 = nearest_rank(inference_ms_, 0.99);
  return m;
}

bool Engine::monitoring(Pid pid) const {
  auto it = pids_.find(pid);
  return it != pids_.end() && it->second.state == State::Monitoring;
}

bool Engine::terminated(Pid pid) const {
  auto it = pids_.find(pid);
  return it != pids_.end() && it->second.state == State::Terminated;
}

ReplayResult run_replay(std::span<const FileEvent> events, const DecoyRegistry& registry, const GenePool* pool,
                        const BoostedForest& model, const PipelineConfig& config, ContentProvider contents) {
  Engine engine(registry, pool, model, config, std::move(contents));
  auto t0 = Clock::now();
  std::size_t index = 0;
  try {
    for (; index < events.size(); ++index) engine.process(events[index]);
    engine.finish();
  } catch (const Error& e) {
    throw Error(e.code(), "event " + std::to_string(index + 1) + ": " + e.what());
  }
  ReplayResult result;
  result.alerts = engine.alerts();
  result.metrics = engine.metrics();
  result.metrics.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  result.metrics.events_per_second =
      result.metrics.wall_seconds > 0 ? static_cast<double>(events.size()) / result.metrics.wall_seconds : 0;
  return result;
}

ContentProvider note_contents_from_json(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + file.string());
  auto texts = std::make_shared<std::unordered_map<std::string, std::string>>();
  try {
    auto j = nlohmann::json::parse(in);
    for (auto& [path, text] : j.items()) texts->emplace(path, text.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedLine, file.string() + ": " + e.what());
  }
  return [texts](const std::string& path) -> std::optional<std::string> {
    auto it = texts->find(path);
    if (it == texts->end()) return std::nullopt;
    return it->second;
  };
}

// ---------------------------------------------------------------------------

struct LiveSession::Impl {
  Impl(const DecoyRegistry& registry, std::vector<std::filesystem::path> dirs, const GenePool* pool,
       const BoostedForest& model, PipelineConfig config)
      : engine(registry, pool, model, config, read_file),
        watcher(registry, std::move(dirs), [this](const FileEvent& e) { feed(e); }) {}

  static std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void feed(const FileEvent& e) {
    std::lock_guard lock(mutex);
    engine.process(e);
  }

  void tick() {
    std::unique_lock lock(mutex);
    while (running) {
      cv.wait_for(lock, std::chrono::milliseconds(50));
      if (!running) break;
      engine.advance_to(watcher.now());
    }
  }

  std::mutex mutex;
  std::condition_variable cv;
  bool running = false;
  Engine engine;
  LiveWatcher watcher;
  std::thread timer;
  Clock::time_point started;
};

LiveSession::LiveSession(const DecoyRegistry& registry, std::vector<std::filesystem::path> dirs, const GenePool* pool,
                         const BoostedForest& model, PipelineConfig config)
    : impl_(std::make_unique<Impl>(registry, std::move(dirs), pool, model, config)) {}

LiveSession::~LiveSession() { stop(); }

void LiveSession::start() {
  impl_->engine.on_alert = [this](const Alert& a) {
    if (on_alert) on_alert(a);
  };
  impl_->watcher.start();
  {
    std::lock_guard lock(impl_->mutex);
    impl_->running = true;
  }
  impl_->started = Clock::now();
  impl_->timer = std::thread([this] { impl_->tick(); });
}

void LiveSession::stop() {
  if (!impl_) return;
  impl_->watcher.stop();
  {
    std::lock_guard lock(impl_->mutex);
    if (!impl_->running) return;
    impl_->running = false;
  }
  impl_->cv.notify_all();
  if (impl_->timer.joinable()) impl_->timer.join();
  std::lock_guard lock(impl_->mutex);
  impl_->engine.finish();
}

std::vector<Alert> LiveSession::alerts() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->engine.alerts();
}

Metrics LiveSession::metrics() const {
  std::lock_guard lock(impl_->mutex);
  Metrics m = impl_->engine.metrics();
  m.wall_seconds = std::chrono::duration<double>(Clock::now() - impl_->started).count();
  m.events_per_second = m.wall_seconds > 0 ? static_cast<double>(m.events) / m.wall_seconds : 0;
  return m;
}

}  // namespace mdr
