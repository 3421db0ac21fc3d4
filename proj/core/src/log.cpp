#include "crannpc/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace crannpc {
namespace {

std::atomic<int> g_level{static_cast<int>(LogLevel::kWarning)};
std::atomic<long> g_warnings{0};
std::mutex g_mutex;

void emit(const char* tag, std::string_view message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::clog << "[cran-npc " << tag << "] " << message << '\n';
}

}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warning(std::string_view message) {
  ++g_warnings;
  if (g_level >= static_cast<int>(LogLevel::kWarning)) emit("warn", message);
}

void log_info(std::string_view message) {
  if (g_level >= static_cast<int>(LogLevel::kInfo)) emit("info", message);
}

void log_debug(std::string_view message) {
  if (g_level >= static_cast<int>(LogLevel::kDebug)) emit("debug", message);
}

long warning_count() { return g_warnings.load(); }

}  // namespace crannpc
