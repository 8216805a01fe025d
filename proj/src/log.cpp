#include "cornyield/log.hpp"

#include <iostream>
#include <mutex>

namespace cornyield::log {

namespace {

std::mutex g_mutex;
Sink g_sink;

void emit(Level level, std::string_view message) {
    std::lock_guard lock(g_mutex);
    if (g_sink) {
        g_sink(level, message);
        return;
    }
    std::cerr << (level == Level::Warning ? "[warn] " : "[info] ") << message << '\n';
}

}  // namespace

void set_sink(Sink sink) {
    std::lock_guard lock(g_mutex);
    g_sink = std::move(sink);
}

void reset_sink() { set_sink(nullptr); }

void info(std::string_view message) { emit(Level::Info, message); }
void warn(std::string_view message) { emit(Level::Warning, message); }

}  // namespace cornyield::log
