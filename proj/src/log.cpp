#include "intentflow/log.hpp"

#include <atomic>
#include <iostream>

namespace intentflow::log {

namespace {
std::atomic<bool> g_quiet{false};
}

void warn(std::string_view message) {
  if (!g_quiet.load()) std::cerr << "warning: " << message << '\n';
}

void info(std::string_view message) {
  if (!g_quiet.load()) std::cerr << message << '\n';
}

void set_quiet(bool quiet) noexcept { g_quiet.store(quiet); }

}  // namespace intentflow::log
