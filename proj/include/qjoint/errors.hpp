#ifndef QJOINT_ERRORS_HPP
#define QJOINT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qjoint {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};
struct SingularKernel : Error {
  using Error::Error;
};
struct CutoffTooSmall : Error {
  using Error::Error;
};
struct UnitarityViolation : Error {
  using Error::Error;
};
struct InvalidDistribution : Error {
  using Error::Error;
};
struct UnsupportedState : Error {
  using Error::Error;
};
struct UnwritableOutput : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};

}  // namespace qjoint

#endif  // QJOINT_ERRORS_HPP
