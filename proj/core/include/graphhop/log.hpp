#pragma once

#include <string_view>

namespace graphhop {

enum class log_level { error = 0, warn = 1, info = 2, debug = 3 };

void set_log_level(log_level level);
log_level current_log_level();
log_level parse_log_level(std::string_view name);

// Diagnostics go to stderr; standard output is reserved for results.
void log_message(log_level level, std::string_view message);

inline void log_error(std::string_view m) { log_message(log_level::error, m); }
inline void log_warn(std::string_view m) { log_message(log_level::warn, m); }
inline void log_info(std::string_view m) { log_message(log_level::info, m); }
inline void log_debug(std::string_view m) { log_message(log_level::debug, m); }

}  // namespace graphhop
