#include "shapeboost/log.hpp"

#include <iostream>
#include <mutex>

namespace shapeboost {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& sink() {
    static WarningHandler h = [](std::string_view msg) { std::clog << "warning: " << msg << '\n'; };
    return h;
}

} // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(sink_mutex());
    auto prev = std::move(sink());
    sink() = std::move(handler);
    return prev;
}

void warn(std::string_view message) {
    std::lock_guard lock(sink_mutex());
    if (sink()) sink()(message);
}

} // namespace shapeboost
