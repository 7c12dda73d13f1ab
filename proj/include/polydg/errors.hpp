#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>

namespace polydg {

/// Bad argument value (odd subdivision count, unsupported degree, theta out of range, ...).
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Self-intersecting or degenerate polygon input.
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-manifold edge configuration found while building mesh topology.
class TopologyError : public std::runtime_error {
public:
    TopologyError(const std::string& what, std::size_t v0, std::size_t v1)
        : std::runtime_error(what), vertices_{v0, v1} {}

    std::pair<std::size_t, std::size_t> offending_edge() const { return vertices_; }

private:
    std::pair<std::size_t, std::size_t> vertices_;
};

/// Malformed input file or configuration.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline std::function<void(const std::string&)>& warning_sink()
{
    static std::function<void(const std::string&)> sink = [](const std::string& msg) {
        std::cerr << "polydg warning: " << msg << '\n';
    };
    return sink;
}
inline std::mutex& warning_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace detail

/// Replace the destination of library warnings; returns the previous sink.
inline std::function<void(const std::string&)> set_warning_sink(std::function<void(const std::string&)> sink)
{
    std::lock_guard lock(detail::warning_mutex());
    return std::exchange(detail::warning_sink(), std::move(sink));
}

inline void warn(const std::string& msg)
{
    std::lock_guard lock(detail::warning_mutex());
    if (detail::warning_sink()) detail::warning_sink()(msg);
}

} // namespace polydg
