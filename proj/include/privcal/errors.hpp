#pragma once

#include <stdexcept>
#include <string>

namespace privcal {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BadLevel : Error { using Error::Error; };
struct EmptyScores : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct EmptyPart : Error { using Error::Error; };
struct InvalidBand : Error { using Error::Error; };
struct BadClassIndex : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct WeightUndefined : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct BadTau : Error { using Error::Error; };
struct DegenerateData : Error { using Error::Error; };
struct CapExceeded : Error { using Error::Error; };
struct NoObservedColumns : Error { using Error::Error; };
struct TargetUnreachable : Error { using Error::Error; };
struct BadBeta : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace privcal
