#pragma once

#include <string_view>

namespace intentflow::log {

// Messages go to stderr; `set_quiet(true)` silences warnings (used by tests).
void warn(std::string_view message);
void info(std::string_view message);
void set_quiet(bool quiet) noexcept;

}  // namespace intentflow::log
