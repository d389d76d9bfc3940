#pragma once

#include <stdexcept>
#include <string>

namespace grabnel {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GRABNEL_DEFINE_ERROR(Name)          \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

// graph-core
GRABNEL_DEFINE_ERROR(InvalidGraph);
GRABNEL_DEFINE_ERROR(InvalidPerturbation);

// data-io
GRABNEL_DEFINE_ERROR(GenerationFailure);
GRABNEL_DEFINE_ERROR(ParseError);
GRABNEL_DEFINE_ERROR(InconsistentIndex);
GRABNEL_DEFINE_ERROR(DecodeError);

// wl-features / surrogate
GRABNEL_DEFINE_ERROR(TypeMismatch);
GRABNEL_DEFINE_ERROR(SingularFit);
GRABNEL_DEFINE_ERROR(DimensionMismatch);

// acquisition
GRABNEL_DEFINE_ERROR(MutationExhausted);

// victim
GRABNEL_DEFINE_ERROR(ShapeMismatch);
GRABNEL_DEFINE_ERROR(DivergenceError);
GRABNEL_DEFINE_ERROR(ProtocolError);
GRABNEL_DEFINE_ERROR(Timeout);
GRABNEL_DEFINE_ERROR(SimplexViolation);

// attack / harness
GRABNEL_DEFINE_ERROR(InvalidConfig);
GRABNEL_DEFINE_ERROR(EmptyInput);

#undef GRABNEL_DEFINE_ERROR

/// A victim replied with {"id", "error"}.
class RemoteError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

}  // namespace grabnel
