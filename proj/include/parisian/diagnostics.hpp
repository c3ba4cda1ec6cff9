#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace parisian {

using LogSink = std::function<void(std::string_view)>;

namespace detail {

struct LogState {
  std::mutex mutex;
  LogSink sink = [](std::string_view msg) { std::clog << "[parisian] " << msg << '\n'; };
};

inline LogState& log_state() {
  static LogState state;
  return state;
}

}  // namespace detail

/// Replaces the process-wide notice sink. Passing an empty function silences notices.
inline void set_log_sink(LogSink sink) {
  auto& state = detail::log_state();
  std::lock_guard lock(state.mutex);
  state.sink = std::move(sink);
}

inline void log_notice(std::string_view msg) {
  auto& state = detail::log_state();
  std::lock_guard lock(state.mutex);
  if (state.sink) state.sink(msg);
}

/// RAII capture of notices, mostly for tests.
class ScopedLogCapture {
 public:
  ScopedLogCapture() {
    set_log_sink([this](std::string_view m) { messages_.emplace_back(m); });
  }
  ~ScopedLogCapture() {
    set_log_sink([](std::string_view msg) { std::clog << "[parisian] " << msg << '\n'; });
  }
  ScopedLogCapture(const ScopedLogCapture&) = delete;
  ScopedLogCapture& operator=(const ScopedLogCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(std::string_view needle) const {
    for (const auto& m : messages_)
      if (m.find(needle) != std::string::npos) return true;
    return false;
  }

 private:
  std::vector<std::string> messages_;
};

}  // namespace parisian
