#include "dfcn/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace dfcn::log {

namespace {
std::mutex g_mutex;
Sink g_sink;
std::atomic<std::size_t> g_count{0};
}  // namespace

void set_warning_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void warn(std::string_view message) {
  ++g_count;
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::clog << "[dfcn] warning: " << message << '\n';
  }
}

std::size_t warning_count() noexcept { return g_count.load(); }

}  // namespace dfcn::log
