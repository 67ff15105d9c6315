#pragma once

#include <stdexcept>
#include <string>

namespace magsi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A chart coordinate lies outside the chart's valid domain.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// Input within the axis margin of the z-axis, where the rotational charts
/// are multiple-valued and the gauge strings live.
class AxisSingularity : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

/// A profile function is not evaluable (non-finite) on the requested domain.
class ProfileDomain : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace magsi
