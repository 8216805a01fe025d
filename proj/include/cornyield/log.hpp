#pragma once

#include <functional>
#include <string_view>

namespace cornyield::log {

enum class Level { Info, Warning };

// Messages go to stderr unless a sink is installed (tests capture them).
using Sink = std::function<void(Level, std::string_view)>;
void set_sink(Sink sink);
void reset_sink();

void info(std::string_view message);
void warn(std::string_view message);

}  // namespace cornyield::log
