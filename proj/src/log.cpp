#include "egcm/log.hpp"

#include <iostream>
#include <mutex>

namespace egcm {

namespace {
std::mutex g_mu;
WarningHandler& handler() {
  static WarningHandler h = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return h;
}
}  // namespace

void set_warning_handler(WarningHandler h) {
  std::lock_guard lock(g_mu);
  handler() = std::move(h);
}

void warn(std::string_view message) {
  std::lock_guard lock(g_mu);
  if (handler()) handler()(message);
}

}  // namespace egcm
