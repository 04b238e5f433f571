#pragma once

#include <array>

#include "qcl/model.hpp"
#include "qcl/propagator.hpp"

namespace qcl {

enum class ObjectiveKind { SD, GRK_SD, GRK_SP };

double j_sd(const Mat16& psi, const GateTarget& gate);
double j_grk_sd(const std::array<Vec16, 3>& final_states, const GateTarget& gate);
double j_grk_sp(const std::array<Vec16, 3>& final_states, const GateTarget& gate);

// Propagates (full channel for SD, the three probe states for GRK) and applies
// the kinematic functional.
double evaluate(ObjectiveKind kind, const GeneratorSet& gen, const ControlGrid& grid,
                const ControlVector& f, const GateTarget& gate);

double evaluate_params(ObjectiveKind kind, const GeneratorSet& gen,
                       const ControlGrid& grid, const ParamVector& g,
                       const GateTarget& gate);

}  // namespace qcl
