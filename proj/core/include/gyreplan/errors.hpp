#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "gyreplan/types.hpp"

namespace gyreplan {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise invalid argument to a pure evaluation.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Query outside the region where a quantity is defined.
class RangeError : public Error {
  public:
    using Error::Error;
};

class NumericError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Raised when an integration step produces a non-finite state. Carries the
/// state and time the failing step started from, plus the grid node when the
/// failure happened inside a flow-map evaluation.
class IntegrationError : public Error {
  public:
    IntegrationError(const std::string& what, Vec2 position, double time,
                     std::optional<std::size_t> node = std::nullopt)
        : Error(what), position_(position), time_(time), node_(node) {}

    const Vec2& position() const noexcept { return position_; }
    double time() const noexcept { return time_; }
    const std::optional<std::size_t>& node() const noexcept { return node_; }

  private:
    Vec2 position_;
    double time_;
    std::optional<std::size_t> node_;
};

class SolverError : public Error {
  public:
    using Error::Error;
};

} // namespace gyreplan
