#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "egcm/log.hpp"

int main(int argc, char** argv) {
  // Expected warnings from edge-case tests would clutter the output.
  egcm::set_warning_handler([](std::string_view) {});
  doctest::Context ctx;
  ctx.applyCommandLine(argc, argv);
  return ctx.run();
}
