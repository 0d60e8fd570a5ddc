#pragma once

#include <stdexcept>
#include <string>

namespace lae {

enum class ErrorKind {
    InvalidArgument,
    InfeasibleLatency,    // loop deadline missed
    Unstabilizable,
    CoincidentPosition,
    NoLink,
    StabilityInfeasible,
    InfeasibleAllocation,
    EmptyFeasibleRegion,
    ScenarioInfeasible,
    InvalidAction,
    LayerCollapse,
    TrainingDiverged,
    Config,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace lae
