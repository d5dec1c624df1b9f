#include "mdr/live_watcher.hpp"

#include <poll.h>
#include <sys/eventfd.h>
#include <sys/inotify.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "mdr/error.hpp"
#include "mdr/hashing.hpp"

namespace fs = std::filesystem;

namespace mdr {

namespace {

constexpr std::uint32_t kWatchMask =
    IN_CREATE | IN_CLOSE_WRITE | IN_DELETE | IN_MOVED_FROM | IN_MOVED_TO | IN_DELETE_SELF;

std::string normalized(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

}  // namespace

struct LiveWatcher::Impl {
  const DecoyRegistry& registry;
  std::vector<fs::path> dirs;
  EventSink sink;
  BoundedQueue<Trigger> triggers;

  int inotify_fd = -1;
  int stop_fd = -1;
  std::thread reader;
  std::atomic<bool> running{false};
  std::chrono::steady_clock::time_point epoch = std::chrono::steady_clock::now();
  std::unordered_map<int, std::string> watch_dirs;

  Impl(const DecoyRegistry& reg, std::vector<fs::path> d, EventSink s, std::size_t cap)
      : registry(reg), dirs(std::move(d)), sink(std::move(s)), triggers(cap) {}

  Micros now() const {
    return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - epoch)
        .count();
  }

  void add_watch_tree(const fs::path& root) {
    auto add = [&](const fs::path& dir) {
      std::string key = normalized(dir);
      int wd = inotify_add_watch(inotify_fd, key.c_str(), kWatchMask);
      if (wd < 0) throw Error(ErrorCode::WatchUnavailable, key + ": " + std::strerror(errno));
      watch_dirs[wd] = key;
    };
    add(root);
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
      if (ec) break;
      if (it->is_directory(ec) && !it->is_symlink(ec)) add(it->path());
    }
  }

  void emit(Operation op, std::string path, std::optional<std::string> old = std::nullopt) {
    FileEvent e = make_event(now(), kUnattributedPid, "unattributed", op, std::move(path), std::move(old));
    if (op == Operation::Write) {
      // Content identical to the registered decoy means nothing changed.
      if (auto entry = registry.find(e.file_name)) {
        std::ifstream in(e.file_name, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        if (in && sha256_hex(ss.str()) == entry->digest) return;
      }
    }
    if (sink) sink(e);
    if (auto t = check_event(e, registry)) triggers.push(std::move(*t));
  }

  void handle_batch(const char* buf, ssize_t len) {
    std::unordered_map<std::uint32_t, std::string> moved_from;
    for (const char* p = buf; p < buf + len;) {
      const auto* ev = reinterpret_cast<const inotify_event*>(p);
      p += sizeof(inotify_event) + ev->len;

      if (ev->mask & IN_IGNORED) {
        watch_dirs.erase(ev->wd);
        continue;
      }
      auto dir = watch_dirs.find(ev->wd);
      if (dir == watch_dirs.end() || ev->len == 0) continue;
      std::string path = dir->second + "/" + ev->name;
      const bool is_dir = ev->mask & IN_ISDIR;

      if (ev->mask & IN_CREATE) {
        if (is_dir) {
          try {
            add_watch_tree(path);
          } catch (const Error&) {
          }
        } else {
          emit(Operation::Create, path);
        }
      } else if (ev->mask & IN_CLOSE_WRITE) {
        emit(Operation::Write, path);
      } else if (ev->mask & IN_DELETE) {
        if (!is_dir) emit(Operation::Delete, path);
      } else if (ev->mask & IN_MOVED_FROM) {
        if (!is_dir) moved_from[ev->cookie] = path;
      } else if (ev->mask & IN_MOVED_TO) {
        if (is_dir) continue;
        if (auto it = moved_from.find(ev->cookie); it != moved_from.end()) {
          emit(Operation::Rename, path, it->second);
          moved_from.erase(it);
        } else {
          emit(Operation::Create, path);
        }
      }
    }
    // Moved out of the watched tree: the file is gone from our point of view.
    for (auto& [cookie, path] : moved_from) emit(Operation::Delete, std::move(path));
  }

  void run() {
    alignas(inotify_event) std::array<char, 64 * 1024> buf{};
    std::array<pollfd, 2> fds{pollfd{inotify_fd, POLLIN, 0}, pollfd{stop_fd, POLLIN, 0}};
    while (running.load()) {
      int rc = ::poll(fds.data(), fds.size(), -1);
      if (rc < 0) {
        if (errno == EINTR) continue;
        break;
      }
      if (fds[1].revents & POLLIN) break;
      if (fds[0].revents & POLLIN) {
        ssize_t len = ::read(inotify_fd, buf.data(), buf.size());
        if (len > 0) handle_batch(buf.data(), len);
      }
    }
  }
};

LiveWatcher::LiveWatcher(const DecoyRegistry& registry, std::vector<fs::path> dirs, EventSink sink,
                         std::size_t trigger_capacity)
    : impl_(std::make_unique<Impl>(registry, std::move(dirs), std::move(sink), trigger_capacity)) {}

LiveWatcher::~LiveWatcher() { stop(); }

void LiveWatcher::start() {
  if (impl_->running.load()) return;
  impl_->inotify_fd = inotify_init1(IN_NONBLOCK | IN_CLOEXEC);
  if (impl_->inotify_fd < 0) throw Error(ErrorCode::WatchUnavailable, std::strerror(errno));
  impl_->stop_fd = eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK);
  try {
    if (impl_->stop_fd < 0) throw Error(ErrorCode::WatchUnavailable, std::strerror(errno));
    for (const auto& d : impl_->dirs) {
      std::error_code ec;
      if (!fs::is_directory(d, ec)) throw Error(ErrorCode::WatchUnavailable, "not a directory: " + d.string());
      impl_->add_watch_tree(d);
    }
  } catch (...) {
    ::close(impl_->inotify_fd);
    if (impl_->stop_fd >= 0) ::close(impl_->stop_fd);
    impl_->inotify_fd = impl_->stop_fd = -1;
    throw;
  }
  impl_->epoch = std::chrono::steady_clock::now();
  impl_->running.store(true);
  impl_->reader = std::thread([this] { impl_->run(); });
}

void LiveWatcher::stop() {
  if (!impl_ || !impl_->running.exchange(false)) return;
  std::uint64_t one = 1;
  [[maybe_unused]] auto n = ::write(impl_->stop_fd, &one, sizeof one);
  if (impl_->reader.joinable()) impl_->reader.join();
  ::close(impl_->inotify_fd);
  ::close(impl_->stop_fd);
  impl_->inotify_fd = impl_->stop_fd = -1;
  impl_->triggers.close();
}

std::optional<Trigger> LiveWatcher::next_trigger(std::chrono::milliseconds timeout) {
  return impl_->triggers.pop_for(timeout);
}

std::uint64_t LiveWatcher::dropped_triggers() const noexcept { return impl_->triggers.dropped(); }

Micros LiveWatcher::now() const { return impl_->now(); }

}  // namespace mdr
