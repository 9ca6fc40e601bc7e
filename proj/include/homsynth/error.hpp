#ifndef HOMSYNTH_ERROR_HPP
#define HOMSYNTH_ERROR_HPP

#include <stdexcept>
#include <string>

namespace homsynth {

// Failure categories thrown by the library. Geometry routines throw on
// degenerate inputs rather than returning sentinel values, so callers that
// sample configurations at random (the motion generator, RANSAC) can treat
// a throw as a failed draw and move on.
enum class Errc {
  InvalidArgument,
  TooFewPoints,
  DegenerateConfiguration,
  SingularHomography,
  PointAtInfinity,
  SingularIntrinsics,
  SelfIntersectingPolygon,
  CropOutOfBounds,
  NonRectangularCrop,
  DegenerateCrop,
  InvalidSpec,
  NoBoundaryFound,
  NegativeRadicand,
  NoConsensus,
  EmptyInput,
  IoError,
  ParseError,
  IdMismatch,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::DegenerateConfiguration: return "DegenerateConfiguration";
    case Errc::SingularHomography: return "SingularHomography";
    case Errc::PointAtInfinity: return "PointAtInfinity";
    case Errc::SingularIntrinsics: return "SingularIntrinsics";
    case Errc::SelfIntersectingPolygon: return "SelfIntersectingPolygon";
    case Errc::CropOutOfBounds: return "CropOutOfBounds";
    case Errc::NonRectangularCrop: return "NonRectangularCrop";
    case Errc::DegenerateCrop: return "DegenerateCrop";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::NoBoundaryFound: return "NoBoundaryFound";
    case Errc::NegativeRadicand: return "NegativeRadicand";
    case Errc::NoConsensus: return "NoConsensus";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::IdMismatch: return "IdMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace homsynth

#endif  // HOMSYNTH_ERROR_HPP
