#pragma once

#include <string_view>

namespace crannpc {

enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2, kDebug = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_warning(std::string_view message);
void log_info(std::string_view message);
void log_debug(std::string_view message);

// Number of warnings emitted since process start; tests use it to check that
// approximations are reported rather than silent.
long warning_count();

}  // namespace crannpc
