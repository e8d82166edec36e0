// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dgen {

/// Root of the library's error hierarchy. Every throwing operation throws a
/// subclass of this, so callers can catch dgen::Error for "anything from us".
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define DGEN_DEFINE_ERROR(Name)                                               \
    class Name : public Error {                                               \
      public:                                                                  \
        using Error::Error;                                                    \
    }

DGEN_DEFINE_ERROR(InvalidMode);     // tensor mode out of range
DGEN_DEFINE_ERROR(ShapeError);      // dimension mismatch between operands
DGEN_DEFINE_ERROR(NumericError);    // non-finite input or failed numeric step
DGEN_DEFINE_ERROR(InvalidRank);     // Tucker rank outside [1, extent]
DGEN_DEFINE_ERROR(InvalidDomain);   // domain index outside [0, S)
DGEN_DEFINE_ERROR(EmptyBatch);      // training batch with no instances
DGEN_DEFINE_ERROR(EmptyDomain);     // domain with no feature vectors
DGEN_DEFINE_ERROR(LabelSpaceError); // label outside the shared label space
DGEN_DEFINE_ERROR(FormatError);     // malformed file or manifest
DGEN_DEFINE_ERROR(ConfigError);     // invalid experiment configuration

#undef DGEN_DEFINE_ERROR

}  // namespace dgen
