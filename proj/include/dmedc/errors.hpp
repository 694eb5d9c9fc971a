#pragma once

#include <stdexcept>
#include <string>

namespace dmedc {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : Error {
  using Error::Error;
};
struct NotPositiveDefinite : Error {
  using Error::Error;
};
struct ConvergenceFailure : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct MaxIterExceeded : Error {
  using Error::Error;
};
struct BadDims : Error {
  using Error::Error;
};
struct InfeasibleParameters : Error {
  using Error::Error;
};
struct DualBoundViolated : Error {
  using Error::Error;
};
struct RankDeficient : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct SchemaMismatch : Error {
  using Error::Error;
};

}  // namespace dmedc
