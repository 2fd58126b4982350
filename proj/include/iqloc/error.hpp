#pragma once

#include <stdexcept>
#include <string>

namespace iqloc {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed files, violated preconditions on loaded records.
class DataError : public Error {
  public:
    using Error::Error;
};

/// A remote model backend could not be reached or answered off-protocol.
/// Kept distinct from any score so callers never mistake an outage for a low score.
class TransportError : public Error {
  public:
    using Error::Error;
};

}  // namespace iqloc
