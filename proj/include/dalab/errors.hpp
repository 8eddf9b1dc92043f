#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dalab {

enum class ErrorCode {
  InvalidArgument,
  NotUnimodular,
  NotPartiallyHyperbolic,
  InvalidShear,
  DegenerateIntersection,
  NumericalBlowup,
  PeriodTooLarge,
  NewtonDiverged,
  NonHyperbolicOrbit,
  NoSpectralGap,
  InversionDiverged,
  SegmentTooShort,
  FrameFailure,
  NotOnLeaf,
  NonExpandingBundle,
  NoPositiveExponents,
  ConfigInvalid,
  IOFailure,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code identifies the failure mode.
class LabError : public std::runtime_error {
 public:
  LabError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dalab
