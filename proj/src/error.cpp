#include "lae/error.hpp"

namespace lae {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid argument";
        case ErrorKind::InfeasibleLatency: return "infeasible latency";
        case ErrorKind::Unstabilizable: return "unstabilizable model";
        case ErrorKind::CoincidentPosition: return "coincident position";
        case ErrorKind::NoLink: return "no link";
        case ErrorKind::StabilityInfeasible: return "stability infeasible";
        case ErrorKind::InfeasibleAllocation: return "infeasible allocation";
        case ErrorKind::EmptyFeasibleRegion: return "empty feasible region";
        case ErrorKind::ScenarioInfeasible: return "scenario infeasible";
        case ErrorKind::InvalidAction: return "invalid action";
        case ErrorKind::LayerCollapse: return "layer collapse";
        case ErrorKind::TrainingDiverged: return "training diverged";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Io: return "io error";
    }
    return "error";
}

}  // namespace lae
