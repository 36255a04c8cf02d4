#pragma once

#include <stdexcept>
#include <string>

namespace xprecode {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Constellation order is not a supported square QAM size.
struct InvalidOrderError : Error {
  using Error::Error;
};

/// Channel is numerically rank deficient.
struct DegenerateChannelError : Error {
  using Error::Error;
};

/// Channel shape (n_r > n_t) outside the supported receiver model.
struct UnsupportedShapeError : Error {
  using Error::Error;
};

/// Invalid configuration (grid sizes, radix, angle counts, empty tables, ...).
struct ConfigError : Error {
  using Error::Error;
};

/// Argument outside its mathematical domain (e.g. power fraction not in [0,1]).
struct DomainError : Error {
  using Error::Error;
};

/// Request outside the implemented problem sizes (odd n, enumeration limits, ...).
struct UnsupportedError : Error {
  using Error::Error;
};

/// A power/normalization constraint is violated beyond tolerance.
struct ConstraintError : Error {
  using Error::Error;
};

/// An iterative method failed to converge.
struct NumericError : Error {
  using Error::Error;
};

/// File/serialization failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace xprecode
