#pragma once

#include <stdexcept>
#include <string>

namespace attire {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BoxOutsideFrame : Error { using Error::Error; };
struct EmptyVector : Error { using Error::Error; };
struct IndexOutOfGrid : Error { using Error::Error; };
struct CenterOutsideCell : Error { using Error::Error; };
struct DegenerateProbability : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct DivergenceDetected : Error { using Error::Error; };
struct MissingFrameData : Error { using Error::Error; };
struct VocabularyViolation : Error { using Error::Error; };
struct DegenerateCrop : Error { using Error::Error; };
struct UnknownZone : Error { using Error::Error; };
struct EmptyRuleActivation : Error { using Error::Error; };
struct NonMonotoneFrameId : Error { using Error::Error; };
struct InvariantViolation : Error { using Error::Error; };
struct NoGroundTruth : Error { using Error::Error; };
struct KTooLarge : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct BadImage : Error { using Error::Error; };

}  // namespace attire
