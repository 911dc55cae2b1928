#pragma once

#include <functional>
#include <string_view>

namespace lexpand {

enum class LogLevel { info, warning, error };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Replaces the process-wide sink and returns the previous one. Passing an empty
// function restores the default stderr sink.
LogSink set_log_sink(LogSink sink);

void log_message(LogLevel level, std::string_view message);

inline void log_info(std::string_view message) { log_message(LogLevel::info, message); }
inline void log_warning(std::string_view message) { log_message(LogLevel::warning, message); }
inline void log_error(std::string_view message) { log_message(LogLevel::error, message); }

// Minimum level forwarded to the sink; the default is `warning`.
void set_log_level(LogLevel level);

}  // namespace lexpand
