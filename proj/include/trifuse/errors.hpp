#pragma once

#include <stdexcept>
#include <string>

namespace trifuse {

// Error taxonomy shared by all modules. Everything derives from Error so
// callers (and the CLI) can catch one type and still report the class.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct UsageError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct CapacityError : Error {
  using Error::Error;
};
struct LookupError : Error {
  using Error::Error;
};
struct IntegrityError : Error {
  using Error::Error;
};
struct LengthError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace trifuse
