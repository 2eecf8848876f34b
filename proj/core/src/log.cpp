#include "graphhop/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>
#include <string>

#include "graphhop/errors.hpp"

namespace graphhop {

namespace {
std::atomic<log_level> g_level{log_level::info};
std::mutex g_mutex;

const char * tag(log_level level) {
    switch (level) {
        case log_level::error: return "error";
        case log_level::warn: return "warn";
        case log_level::info: return "info";
        case log_level::debug: return "debug";
    }
    return "?";
}
}  // namespace

void set_log_level(log_level level) { g_level.store(level); }

log_level current_log_level() { return g_level.load(); }

log_level parse_log_level(std::string_view name) {
    if (name == "error") return log_level::error;
    if (name == "warn") return log_level::warn;
    if (name == "info") return log_level::info;
    if (name == "debug") return log_level::debug;
    throw config_error("unknown log level: " + std::string(name));
}

void log_message(log_level level, std::string_view message) {
    if (level > g_level.load()) return;
    std::lock_guard lock(g_mutex);
    std::fprintf(stderr, "[%s] %.*s\n", tag(level), int(message.size()), message.data());
}

}  // namespace graphhop
