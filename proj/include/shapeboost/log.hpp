#pragma once

#include <functional>
#include <string_view>

namespace shapeboost {

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the sink for non-fatal diagnostics (default: std::clog). Passing
/// an empty handler silences warnings. Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

/// Thread-safe.
void warn(std::string_view message);

} // namespace shapeboost
