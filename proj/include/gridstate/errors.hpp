#pragma once

#include <stdexcept>
#include <string>

namespace gridstate {

// Base for all gridstate input/contract errors. Solver non-convergence is
// never an exception; it is reported through SolutionReport::status.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularImpedance : Error { using Error::Error; };
struct InvalidBase : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct InvalidNetwork : Error { using Error::Error; };

struct InvalidAccuracy : Error { using Error::Error; };
struct MissingTruth : Error { using Error::Error; };

struct UnsupportedElement : Error { using Error::Error; };
struct InvalidBound : Error { using Error::Error; };

struct UnresolvedMeasurement : Error { using Error::Error; };
struct UnsupportedConversion : Error { using Error::Error; };
struct NonsolvableCriterion : Error { using Error::Error; };

struct NoConvergence : Error { using Error::Error; };
struct StatusNotOptimal : Error { using Error::Error; };

}  // namespace gridstate
