#pragma once

#include <cstddef>
#include <string_view>

namespace sdmh {

enum class LogLevel { Quiet = 0, Warning = 1, Info = 2 };

/// Process-wide diagnostic sink on stderr. Messages never affect sampler
/// output; they only report recoverable conditions.
void set_log_level(LogLevel level);
LogLevel log_level();
void log_warning(std::string_view message);
void log_info(std::string_view message);
/// Number of warnings emitted (or suppressed) since start-up.
std::size_t warning_count();

}  // namespace sdmh
