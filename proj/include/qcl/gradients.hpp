#pragma once

#include <array>
#include <vector>

#include "qcl/model.hpp"
#include "qcl/objectives.hpp"
#include "qcl/propagator.hpp"

namespace qcl {

struct GradOptions {
    int segments = 20;
    double fd_step = 1e-5;

    void validate() const;
};

// dt * integral_0^1 exp((1-tau) dt L) B exp(tau dt L) dtau, composite
// trapezoidal rule on `segments` equal subintervals.
Mat16 dexp_integral(const Mat16& l, const Mat16& b, double dt, int segments);

// Derivatives of the final channel matrix with respect to each piecewise
// control value, in f-coordinates: index [k][mu], mu in {u, n1, n2}.
std::vector<std::array<Mat16, 3>> grad_channel(const GeneratorSet& gen,
                                               const ControlGrid& grid,
                                               const ControlVector& f,
                                               const GradOptions& opts = {});

struct ObjectiveEval {
    double value = 0.0;
    Eigen::VectorXd grad;  // 3K, ordered (u, w1, w2)
};

ObjectiveEval eval_with_gradient(ObjectiveKind kind, const GeneratorSet& gen,
                                 const ControlGrid& grid, const ParamVector& g,
                                 const GateTarget& gate,
                                 const GradOptions& opts = {});

inline Eigen::VectorXd grad_objective(ObjectiveKind kind, const GeneratorSet& gen,
                                      const ControlGrid& grid, const ParamVector& g,
                                      const GateTarget& gate,
                                      const GradOptions& opts = {}) {
    return eval_with_gradient(kind, gen, grid, g, gate, opts).grad;
}

Eigen::VectorXd fd_gradient(ObjectiveKind kind, const GeneratorSet& gen,
                            const ControlGrid& grid, const ParamVector& g,
                            const GateTarget& gate, double step = 1e-5);

Eigen::MatrixXd fd_hessian(ObjectiveKind kind, const GeneratorSet& gen,
                           const ControlGrid& grid, const ParamVector& g,
                           const GateTarget& gate, double step = 1e-5,
                           const GradOptions& opts = {});

}  // namespace qcl
