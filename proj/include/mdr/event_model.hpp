// Canonical event, window, trigger and alert types.
//
// Every module speaks in terms of FileEvent: one file-system operation
// attributed to a process. Times are trace-relative microseconds so that
// replays are deterministic.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mdr {

using Micros = std::int64_t;
using Pid = std::int64_t;

inline constexpr Micros kMicrosPerSecond = 1'000'000;

enum class Operation : std::uint8_t { Create, Delete, Rename, Write, Read, Overwrite, Smash };

inline constexpr int kOperationCount = 7;

std::string_view to_string(Operation op) noexcept;
std::optional<Operation> parse_operation(std::string_view token) noexcept;

/// True for operations that change a file's content or existence.
constexpr bool is_modifying(Operation op) noexcept {
  return op == Operation::Write || op == Operation::Delete || op == Operation::Rename ||
         op == Operation::Overwrite || op == Operation::Smash;
}

struct FileEvent {
  Micros time = 0;
  Pid pid = 0;
  std::string pid_name;
  Operation operation = Operation::Read;
  std::string file_name;
  std::string file_type;
  // Rename only: the path before the rename. file_name holds the new path.
  std::optional<std::string> old_file_name;

  bool operator==(const FileEvent&) const = default;
};

/// Lowercased extension of the last path component, without the dot.
std::string extension_of(std::string_view path);
/// Last path component (accepts '/' and '\\' separators).
std::string_view basename_of(std::string_view path) noexcept;
/// Everything before the last separator; empty for bare names.
std::string_view dirname_of(std::string_view path) noexcept;

/// Builds an event with file_type derived from the path.
FileEvent make_event(Micros time, Pid pid, std::string pid_name, Operation op,
                     std::string file_name, std::optional<std::string> old_file_name = std::nullopt);

enum class TriggerSource : std::uint8_t { DecoyTouch, RansomNote, Manual };

std::string_view to_string(TriggerSource source) noexcept;

/// A monitoring point firing for one process.
struct Trigger {
  TriggerSource source = TriggerSource::Manual;
  Pid pid = 0;
  std::string pid_name;
  Micros time = 0;
  std::string path;
  Operation operation = Operation::Write;
  double score = 0.0;  // note similarity for RansomNote triggers
};

struct ProcessWindow {
  Pid pid = 0;
  std::string pid_name;
  Micros window_start = 0;
  Micros window_end = 0;
  std::vector<FileEvent> events;
  TriggerSource trigger = TriggerSource::Manual;
};

enum class ThreatLevelKind : std::uint8_t { None, Low, High };

std::string_view to_string(ThreatLevelKind level) noexcept;

struct ThreatLevel {
  ThreatLevelKind level = ThreatLevelKind::None;
  TriggerSource source = TriggerSource::Manual;
  double score = 0.0;
};

enum class ResponseAction : std::uint8_t { NoneYet, TrackOnly, TerminateSimulated, IsolateSimulated };

std::string_view to_string(ResponseAction action) noexcept;

struct Alert {
  Micros created_at = 0;
  Pid pid = 0;
  std::string pid_name;
  ThreatLevel threat;
  std::vector<std::string> evidence;
  ResponseAction response_taken = ResponseAction::NoneYet;
  Micros trigger_time = 0;

  Micros decision_latency() const noexcept { return created_at - trigger_time; }
};

// ---------------------------------------------------------------------------
// Event log (JSON Lines) I/O.

enum class LogIssueKind : std::uint8_t { MalformedLine, UnknownOperation, NonMonotonicTime };

struct LogIssue {
  LogIssueKind kind;
  std::size_t line = 0;  // 1-based
  std::string detail;
  bool fatal_for_line() const noexcept { return kind != LogIssueKind::NonMonotonicTime; }
};

struct ParsedLog {
  std::vector<FileEvent> events;
  std::vector<LogIssue> issues;
};

/// Parses one JSON object line. Throws Error(MalformedLine / UnknownOperation).
FileEvent parse_event_line(std::string_view line);

/// Parses a JSON Lines stream. Bad lines are skipped and reported; blank lines
/// are ignored. Non-monotonic time per pid is reported but the event is kept.
ParsedLog parse_event_log(std::istream& in);
ParsedLog parse_event_log_file(const std::string& path);

/// Canonical single-line serialization (fixed key order, no trailing newline).
std::string serialize_event(const FileEvent& event);
void write_event_log(std::ostream& out, std::span<const FileEvent> events);

/// Events of `pid` with trigger_time <= time < trigger_time + dt.
ProcessWindow window_events(std::span<const FileEvent> events, Pid pid, Micros trigger_time,
                            Micros dt, TriggerSource trigger = TriggerSource::Manual);

std::string serialize_alert(const Alert& alert);

}  // namespace mdr
