#include "mdr/event_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "mdr/error.hpp"

namespace mdr {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, kOperationCount> kOperationNames = {
    "Create", "Delete", "Rename", "Write", "Read", "Overwrite", "Smash"};

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownOperation: return "UnknownOperation";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::WatchUnavailable: return "WatchUnavailable";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::BadDim: return "BadDim";
    case ErrorCode::NoValidSplit: return "NoValidSplit";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::BadSpec: return "BadSpec";
  }
  return "Unknown";
}

std::string_view to_string(Operation op) noexcept {
  return kOperationNames[static_cast<std::size_t>(op)];
}

std::optional<Operation> parse_operation(std::string_view token) noexcept {
  for (std::size_t i = 0; i < kOperationNames.size(); ++i) {
    if (kOperationNames[i] == token) return static_cast<Operation>(i);
  }
  return std::nullopt;
}

std::string_view to_string(TriggerSource source) noexcept {
  switch (source) {
    case TriggerSource::DecoyTouch: return "DecoyTouch";
    case TriggerSource::RansomNote: return "RansomNote";
    case TriggerSource::Manual: return "Manual";
  }
  return "Manual";
}

std::string_view to_string(ThreatLevelKind level) noexcept {
  switch (level) {
    case ThreatLevelKind::None: return "None";
    case ThreatLevelKind::Low: return "Low";
    case ThreatLevelKind::High: return "High";
  }
  return "None";
}

std::string_view to_string(ResponseAction action) noexcept {
  switch (action) {
    case ResponseAction::NoneYet: return "NoneYet";
    case ResponseAction::TrackOnly: return "TrackOnly";
    case ResponseAction::TerminateSimulated: return "TerminateSimulated";
    case ResponseAction::IsolateSimulated: return "IsolateSimulated";
  }
  return "NoneYet";
}

std::string_view basename_of(std::string_view path) noexcept {
  auto pos = path.find_last_of("/\\");
  return pos == std::string_view::npos ? path : path.substr(pos + 1);
}

std::string_view dirname_of(std::string_view path) noexcept {
  auto pos = path.find_last_of("/\\");
  return pos == std::string_view::npos ? std::string_view{} : path.substr(0, pos);
}

std::string extension_of(std::string_view path) {
  auto base = basename_of(path);
  auto dot = base.rfind('.');
  if (dot == std::string_view::npos || dot + 1 == base.size()) return {};
  std::string ext(base.substr(dot + 1));
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

FileEvent make_event(Micros time, Pid pid, std::string pid_name, Operation op,
                     std::string file_name, std::optional<std::string> old_file_name) {
  FileEvent e;
  e.time = time;
  e.pid = pid;
  e.pid_name = std::move(pid_name);
  e.operation = op;
  e.file_type = extension_of(file_name);
  e.file_name = std::move(file_name);
  e.old_file_name = std::move(old_file_name);
  return e;
}

FileEvent parse_event_line(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedLine, "not a JSON object");

  auto require = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) throw Error(ErrorCode::MalformedLine, std::string("missing field '") + key + "'");
    return *it;
  };
  const auto& time = require("time");
  const auto& pid = require("pid");
  const auto& pid_name = require("pid_name");
  const auto& operation = require("operation");
  const auto& file_name = require("file_name");
  const auto& file_type = require("file_type");
  if (!time.is_number_integer() || !pid.is_number_integer() || !pid_name.is_string() ||
      !operation.is_string() || !file_name.is_string() || !file_type.is_string()) {
    throw Error(ErrorCode::MalformedLine, "field has wrong type");
  }

  const auto& op_token = operation.get_ref<const std::string&>();
  auto op = parse_operation(op_token);
  if (!op) throw Error(ErrorCode::UnknownOperation, op_token);

  FileEvent e;
  e.time = time.get<Micros>();
  e.pid = pid.get<Pid>();
  e.pid_name = pid_name.get<std::string>();
  e.operation = *op;
  e.file_name = file_name.get<std::string>();
  e.file_type = file_type.get<std::string>();
  if (auto it = j.find("old_file_name"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::MalformedLine, "old_file_name must be a string");
    e.old_file_name = it->get<std::string>();
  }
  return e;
}

ParsedLog parse_event_log(std::istream& in) {
  ParsedLog out;
  std::unordered_map<Pid, Micros> last_time;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      FileEvent e = parse_event_line(line);
      auto [it, inserted] = last_time.try_emplace(e.pid, e.time);
      if (!inserted) {
        if (e.time < it->second) {
          out.issues.push_back({LogIssueKind::NonMonotonicTime, line_no,
                                "pid " + std::to_string(e.pid) + " time went backwards"});
        }
        it->second = std::max(it->second, e.time);
      }
      out.events.push_back(std::move(e));
    } catch (const Error& err) {
      auto kind = err.code() == ErrorCode::UnknownOperation ? LogIssueKind::UnknownOperation
                                                            : LogIssueKind::MalformedLine;
      out.issues.push_back({kind, line_no, err.what()});
    }
  }
  return out;
}

ParsedLog parse_event_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  return parse_event_log(in);
}

std::string serialize_event(const FileEvent& event) {
  ojson j;
  j["time"] = event.time;
  j["pid"] = event.pid;
  j["pid_name"] = event.pid_name;
  j["operation"] = to_string(event.operation);
  j["file_name"] = event.file_name;
  j["file_type"] = event.file_type;
  if (event.old_file_name) j["old_file_name"] = *event.old_file_name;
  return j.dump();
}

void write_event_log(std::ostream& out, std::span<const FileEvent> events) {
  for (const auto& e : events) out << serialize_event(e) << '\n';
}

ProcessWindow window_events(std::span<const FileEvent> events, Pid pid, Micros trigger_time,
                            Micros dt, TriggerSource trigger) {
  if (dt <= 0) throw std::invalid_argument("window_events: dt must be positive");
  ProcessWindow w;
  w.pid = pid;
  w.window_start = trigger_time;
  w.window_end = trigger_time + dt;
  w.trigger = trigger;
  for (const auto& e : events) {
    if (e.pid != pid || e.time < w.window_start || e.time >= w.window_end) continue;
    if (w.pid_name.empty()) w.pid_name = e.pid_name;
    w.events.push_back(e);
  }
  return w;
}

std::string serialize_alert(const Alert& alert) {
  ojson j;
  j["created_at"] = alert.created_at;
  j["pid"] = alert.pid;
  j["pid_name"] = alert.pid_name;
  j["level"] = to_string(alert.threat.level);
  j["source"] = to_string(alert.threat.source);
  j["score"] = alert.threat.score;
  j["trigger_time"] = alert.trigger_time;
  j["decision_latency_us"] = alert.decision_latency();
  j["response"] = to_string(alert.response_taken);
  j["evidence"] = alert.evidence;
  return j.dump();
}

}  // namespace mdr
