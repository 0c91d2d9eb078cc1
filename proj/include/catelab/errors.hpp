#pragma once

#include <stdexcept>
#include <string>

namespace catelab {

/// Base class for all catelab errors.
class error : public std::runtime_error {
public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// A parameter or argument is outside its valid domain (|rho| >= 1,
/// nonpositive sigma, probability outside (0,1), n = 0, ...).
class invalid_parameter : public error {
public:
  using error::error;
};

/// Estimation cannot proceed: rank-deficient design, empty treatment arm,
/// undefined correlation.
class estimation_error : public error {
public:
  using error::error;
};

/// Scenario configuration is malformed or violates an invariant.
class config_error : public error {
public:
  using error::error;
};

/// Writing an output artifact failed.
class io_error : public error {
public:
  using error::error;
};

}  // namespace catelab
