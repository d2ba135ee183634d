#pragma once

#include <stdexcept>
#include <string>

namespace bubblechain {

// Base class for every error raised by the library. Callers that only care
// about "something went wrong" catch this; the CLI maps subclasses to exit
// codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BUBBLECHAIN_DEFINE_ERROR(Name)        \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(#Name ": " + what) {}         \
  }

BUBBLECHAIN_DEFINE_ERROR(InvalidBasisState);
BUBBLECHAIN_DEFINE_ERROR(ShapeError);
BUBBLECHAIN_DEFINE_ERROR(InvalidSitePair);
BUBBLECHAIN_DEFINE_ERROR(IndexError);
BUBBLECHAIN_DEFINE_ERROR(InvalidArgument);
BUBBLECHAIN_DEFINE_ERROR(UnsupportedOption);
BUBBLECHAIN_DEFINE_ERROR(IdentificationError);
BUBBLECHAIN_DEFINE_ERROR(NoResonance);
BUBBLECHAIN_DEFINE_ERROR(InvalidState);
BUBBLECHAIN_DEFINE_ERROR(InvalidPlan);
BUBBLECHAIN_DEFINE_ERROR(GridError);
BUBBLECHAIN_DEFINE_ERROR(EmptyPostSelection);
BUBBLECHAIN_DEFINE_ERROR(MappingUnavailable);
BUBBLECHAIN_DEFINE_ERROR(LoweringError);
BUBBLECHAIN_DEFINE_ERROR(Unsupported);
BUBBLECHAIN_DEFINE_ERROR(ConfigError);

#undef BUBBLECHAIN_DEFINE_ERROR

// Numerical guard breaches (dimension limit) get their own type so the CLI can
// tell them apart from configuration mistakes.
class TooLarge : public Error {
 public:
  explicit TooLarge(const std::string& what) : Error("TooLarge: " + what) {}
};

}  // namespace bubblechain
