#include "lexpand/logging.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace lexpand {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

void default_sink(LogLevel level, std::string_view message) {
  const char* tag = level == LogLevel::info ? "info" : level == LogLevel::warning ? "warning" : "error";
  std::cerr << "[lexpand " << tag << "] " << message << '\n';
}

LogSink& current_sink() {
  static LogSink sink = default_sink;
  return sink;
}

LogLevel& current_level() {
  static LogLevel level = LogLevel::warning;
  return level;
}

}  // namespace

LogSink set_log_sink(LogSink sink) {
  std::lock_guard lock(sink_mutex());
  LogSink previous = std::move(current_sink());
  current_sink() = sink ? std::move(sink) : LogSink(default_sink);
  return previous;
}

void set_log_level(LogLevel level) {
  std::lock_guard lock(sink_mutex());
  current_level() = level;
}

void log_message(LogLevel level, std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (static_cast<int>(level) < static_cast<int>(current_level())) return;
  current_sink()(level, message);
}

}  // namespace lexpand
