#include "dalab/torus.hpp"

#include <cmath>

#include "dalab/errors.hpp"

namespace dalab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotUnimodular: return "NotUnimodular";
    case ErrorCode::NotPartiallyHyperbolic: return "NotPartiallyHyperbolic";
    case ErrorCode::InvalidShear: return "InvalidShear";
    case ErrorCode::DegenerateIntersection: return "DegenerateIntersection";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::PeriodTooLarge: return "PeriodTooLarge";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::NonHyperbolicOrbit: return "NonHyperbolicOrbit";
    case ErrorCode::NoSpectralGap: return "NoSpectralGap";
    case ErrorCode::InversionDiverged: return "InversionDiverged";
    case ErrorCode::SegmentTooShort: return "SegmentTooShort";
    case ErrorCode::FrameFailure: return "FrameFailure";
    case ErrorCode::NotOnLeaf: return "NotOnLeaf";
    case ErrorCode::NonExpandingBundle: return "NonExpandingBundle";
    case ErrorCode::NoPositiveExponents: return "NoPositiveExponents";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IOFailure: return "IOFailure";
  }
  return "Unknown";
}

Vec3 TorusPoint::wrap(const Vec3& lift) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    double r = lift[i] - std::floor(lift[i]);
    if (r >= 1.0) r = 0.0;
    out[i] = r;
  }
  return out;
}

Vec3 nearest_difference(const TorusPoint& x, const TorusPoint& y) {
  Vec3 d = y.coords() - x.coords();
  for (int i = 0; i < 3; ++i) d[i] -= std::round(d[i]);
  return d;
}

double torus_distance(const TorusPoint& x, const TorusPoint& y) {
  return nearest_difference(x, y).norm();
}

}  // namespace dalab
