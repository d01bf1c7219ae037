#include "sdmh/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace sdmh {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::Warning)};
std::atomic<std::size_t> g_warnings{0};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warning(std::string_view message) {
  ++g_warnings;
  if (g_level.load() < static_cast<int>(LogLevel::Warning)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "warning: " << message << '\n';
}

void log_info(std::string_view message) {
  if (g_level.load() < static_cast<int>(LogLevel::Info)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << message << '\n';
}

std::size_t warning_count() { return g_warnings.load(); }

}  // namespace sdmh
