#pragma once

#include <stdexcept>
#include <string>

namespace widur {

// Base for all pipeline errors. Subclasses carry the spec'd error names so
// callers can catch by category; the message names the offending row/value.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define WIDUR_ERROR(Name)                                        \
  struct Name : Error {                                          \
    explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
  }

WIDUR_ERROR(MalformedHeader);
WIDUR_ERROR(NonMonotonicTimestamp);
WIDUR_ERROR(NonFiniteValue);
WIDUR_ERROR(UnknownLabel);
WIDUR_ERROR(IntervalOutOfRange);
WIDUR_ERROR(OverlappingIntervals);
WIDUR_ERROR(SeriesTooShort);
WIDUR_ERROR(SegmentTooShort);
WIDUR_ERROR(EmptySpectrogram);
WIDUR_ERROR(DegenerateInput);
WIDUR_ERROR(NonFiniteInput);
WIDUR_ERROR(EmptyDataset);
WIDUR_ERROR(LengthMismatch);
WIDUR_ERROR(EmptyInput);
WIDUR_ERROR(SingleClass);
WIDUR_ERROR(NoConvergence);
WIDUR_ERROR(ConfigInfeasible);
WIDUR_ERROR(InvalidConfig);
WIDUR_ERROR(IoError);

#undef WIDUR_ERROR

}  // namespace widur
