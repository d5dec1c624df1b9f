// inotify-backed watcher that turns live file activity into FileEvents and
// DecoyTouch triggers.
//
// inotify does not report the acting process, so live events carry
// kUnattributedPid. Reads are not watched. A write whose resulting content
// still matches the registered digest (for example the deployment's own
// write arriving late) is swallowed, so deployment never self-triggers.
#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "mdr/bounded_queue.hpp"
#include "mdr/decoy.hpp"
#include "mdr/event_model.hpp"

namespace mdr {

inline constexpr Pid kUnattributedPid = 0;

class LiveWatcher {
 public:
  using EventSink = std::function<void(const FileEvent&)>;

  LiveWatcher(const DecoyRegistry& registry, std::vector<std::filesystem::path> dirs,
              EventSink sink = {}, std::size_t trigger_capacity = 1024);
  ~LiveWatcher();

  LiveWatcher(const LiveWatcher&) = delete;
  LiveWatcher& operator=(const LiveWatcher&) = delete;

  /// Installs recursive watches and starts the reader thread.
  /// Throws Error(WatchUnavailable) when inotify cannot be used.
  void start();
  void stop();

  std::optional<Trigger> next_trigger(std::chrono::milliseconds timeout);
  std::uint64_t dropped_triggers() const noexcept;

  /// Microseconds since start(); the time base of emitted events.
  Micros now() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mdr
