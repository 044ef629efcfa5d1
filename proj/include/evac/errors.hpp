#pragma once

#include <stdexcept>
#include <string>

namespace evac {

/// Base of every domain error. kind() is the stable error-class name that
/// gets recorded in dataset manifests.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define EVAC_DECLARE_ERROR(Name)                                          \
    class Name : public Error {                                           \
    public:                                                               \
        explicit Name(const std::string& what) : Error(#Name, what) {}    \
    }

EVAC_DECLARE_ERROR(InfeasibleParams);
EVAC_DECLARE_ERROR(SiteTooLarge);
EVAC_DECLARE_ERROR(OutOfBounds);
EVAC_DECLARE_ERROR(OutOfRange);
EVAC_DECLARE_ERROR(NoDestination);
EVAC_DECLARE_ERROR(DisconnectedSpace);
EVAC_DECLARE_ERROR(InvalidScenario);
EVAC_DECLARE_ERROR(PlacementFailure);
EVAC_DECLARE_ERROR(Timeout);
EVAC_DECLARE_ERROR(NonPositiveTET);
EVAC_DECLARE_ERROR(NegativeRate);
EVAC_DECLARE_ERROR(NegativeWeights);
EVAC_DECLARE_ERROR(ShapeMismatch);
EVAC_DECLARE_ERROR(EmptyList);
EVAC_DECLARE_ERROR(NonPositiveTruth);
EVAC_DECLARE_ERROR(TooFewSamples);
EVAC_DECLARE_ERROR(FormatError);
EVAC_DECLARE_ERROR(IoError);

#undef EVAC_DECLARE_ERROR

}  // namespace evac
