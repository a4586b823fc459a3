#pragma once

#include <functional>
#include <string_view>

namespace egcm {

// Non-fatal diagnostics (split fallbacks, sampling with replacement, ...).
// The default handler prints to stderr.
using WarningHandler = std::function<void(std::string_view)>;
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace egcm
