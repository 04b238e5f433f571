#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcl/gradients.hpp"
#include "qcl/model.hpp"
#include "qcl/objectives.hpp"
#include "qcl/propagator.hpp"

namespace qcl {

struct GrapeParams {
    double h0 = 1.0;
    double a = 1.1;
    double beta_step = 0.5;
    double eps_acc = 2.5e-3;
    int max_iter = 5000;
    int max_backtracks = 60;
    GradOptions grad;

    void validate() const;
};

struct AnnealParams {
    double initial_temp = 2e4;
    int maxiter = 2000;
    long maxfun = 30000;
    double qv = 2.62;
    double qa = -5.0;
    double restart_temp_ratio = 2e-5;
    double u_max = 30.0;
    double n_max = 10.0;
    std::uint64_t seed = 0;
    GradOptions grad;
    double polish_eps = 1e-3;
    int polish_max_iter = 200;
    int polish_interval = 20;  // chains without improvement before a forced polish

    void validate() const;
};

struct RunRecord {
    std::string config;  // snapshot filled in by callers that own one
    std::uint64_t seed = 0;
    int iterations = 0;
    std::vector<double> history;
    double final_value = 0.0;
    double grad_norm = 0.0;
    double final_sd = 0.0;  // SD functional at the final point, for cross-checking
    ParamVector g;
    ControlVector f;
    double wall_ms = 0.0;
    long nfev = 0;
    std::string termination;
};

// u_k = cos(0.3 t_k), w_{k,l} = exp(-5 (t_k/T - 1/2)^2) sampled at the interval
// right endpoints t_k = k*T/K, k = 1..K.
ParamVector default_initial_guess(const ControlGrid& grid);

RunRecord ingrape_run(ObjectiveKind kind, const GeneratorSet& gen,
                      const ControlGrid& grid, const ParamVector& g0,
                      const GateTarget& gate, const GrapeParams& params);

RunRecord anneal_run(ObjectiveKind kind, const GeneratorSet& gen,
                     const ControlGrid& grid, const std::optional<ControlVector>& f0,
                     const GateTarget& gate, const AnnealParams& params);

}  // namespace qcl
