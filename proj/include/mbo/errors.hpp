#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mbo {

// Base of every error the library throws. kind() is a stable identifier used
// by the CLI for its machine-parsable error line.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual std::string_view kind() const noexcept { return "Error"; }
};

#define MBO_DEFINE_ERROR(Name)                                             \
  class Name : public Error {                                              \
   public:                                                                 \
    using Error::Error;                                                    \
    std::string_view kind() const noexcept override { return #Name; }      \
  }

MBO_DEFINE_ERROR(ScaleOrderError);
MBO_DEFINE_ERROR(DimensionError);
MBO_DEFINE_ERROR(NonpositiveTimeError);
MBO_DEFINE_ERROR(ResolutionError);
MBO_DEFINE_ERROR(ValidationError);
MBO_DEFINE_ERROR(IndexError);
MBO_DEFINE_ERROR(DomainError);
MBO_DEFINE_ERROR(NegativeSquareError);
MBO_DEFINE_ERROR(EnumerationTooLarge);
MBO_DEFINE_ERROR(GuardViolation);
MBO_DEFINE_ERROR(EmptyPhase);
MBO_DEFINE_ERROR(WindowTooShort);
MBO_DEFINE_ERROR(InadmissibleTensions);
MBO_DEFINE_ERROR(UnsupportedDimension);
MBO_DEFINE_ERROR(IoError);
MBO_DEFINE_ERROR(ParseError);
MBO_DEFINE_ERROR(ConfigError);

#undef MBO_DEFINE_ERROR

}  // namespace mbo
