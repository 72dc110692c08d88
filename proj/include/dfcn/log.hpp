#pragma once

#include <functional>
#include <string_view>

namespace dfcn::log {

using Sink = std::function<void(std::string_view)>;

/// Replaces the warning sink (default: stderr). Pass an empty function to restore it.
void set_warning_sink(Sink sink);

void warn(std::string_view message);

/// Number of warnings emitted since process start.
std::size_t warning_count() noexcept;

}  // namespace dfcn::log
