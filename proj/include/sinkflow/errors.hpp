#pragma once

#include <stdexcept>
#include <string>

namespace sinkflow {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define SINKFLOW_ERROR(Name)                                   \
    struct Name : Error {                                      \
        explicit Name(const std::string& what) : Error(what) {} \
    }

SINKFLOW_ERROR(TruncationError);
SINKFLOW_ERROR(NonPositiveError);
SINKFLOW_ERROR(DomainError);
SINKFLOW_ERROR(GridMismatch);
SINKFLOW_ERROR(NonMonotoneMap);
SINKFLOW_ERROR(RangeError);
SINKFLOW_ERROR(NumericOverflow);
SINKFLOW_ERROR(ConvexityLost);
SINKFLOW_ERROR(StabilityError);
SINKFLOW_ERROR(ParticleEscape);
SINKFLOW_ERROR(EmptyTable);
SINKFLOW_ERROR(ConfigError);

#undef SINKFLOW_ERROR

}  // namespace sinkflow
