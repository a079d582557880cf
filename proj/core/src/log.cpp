#include "mitodet/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace mitodet {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& current_sink() {
  static LogSink sink = [](LogLevel level, std::string_view message) {
    if (level == LogLevel::kWarning) {
      std::cerr << "warning: " << message << '\n';
    }
  };
  return sink;
}

void emit(LogLevel level, std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (current_sink()) {
    current_sink()(level, message);
  }
}

}  // namespace

LogSink set_log_sink(LogSink sink) {
  std::lock_guard lock(sink_mutex());
  return std::exchange(current_sink(), std::move(sink));
}

void log_info(std::string_view message) { emit(LogLevel::kInfo, message); }

void log_warning(std::string_view message) { emit(LogLevel::kWarning, message); }

}  // namespace mitodet
