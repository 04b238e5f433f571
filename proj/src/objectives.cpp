#include "qcl/objectives.hpp"

namespace qcl {

double j_sd(const Mat16& psi, const GateTarget& gate) {
    const Mat16 r = psi - gate.psi_u;
    return weighted_channel_inner(r, r) / 32.0;
}

double j_grk_sd(const std::array<Vec16, 3>& final_states, const GateTarget& gate) {
    double s = 0.0;
    for (int m = 0; m < 3; ++m) {
        const Vec16 r = final_states[m] - gate.target_states[m];
        s += weighted_inner(r, r);
    }
    return s / 6.0;
}

double j_grk_sp(const std::array<Vec16, 3>& final_states, const GateTarget& gate) {
    const auto& ss = special_states();
    double s = 0.0;
    for (int m = 0; m < 3; ++m)
        s += weighted_inner(final_states[m], gate.target_states[m]) /
             weighted_norm2(ss.x[m]);
    return 1.0 - s / 3.0;
}

double evaluate(ObjectiveKind kind, const GeneratorSet& gen, const ControlGrid& grid,
                const ControlVector& f, const GateTarget& gate) {
    grid.validate();
    f.validate();
    if (f.size() != grid.K)
        throw std::invalid_argument("evaluate: control length != K");
    const double dt = grid.dt();
    if (kind == ObjectiveKind::SD) {
        Mat16 psi = Mat16::Identity();
        for (int k = 0; k < grid.K; ++k)
            psi = matrix_exp(dt * step_generator(gen, f.u(k), f.n1(k), f.n2(k))) * psi;
        return j_sd(psi, gate);
    }
    const auto& ss = special_states();
    Eigen::Matrix<double, 16, 3> x;
    for (int m = 0; m < 3; ++m) x.col(m) = ss.x[m];
    for (int k = 0; k < grid.K; ++k)
        x = matrix_exp(dt * step_generator(gen, f.u(k), f.n1(k), f.n2(k))) * x;
    const std::array<Vec16, 3> fin = {x.col(0), x.col(1), x.col(2)};
    return kind == ObjectiveKind::GRK_SD ? j_grk_sd(fin, gate) : j_grk_sp(fin, gate);
}

double evaluate_params(ObjectiveKind kind, const GeneratorSet& gen,
                       const ControlGrid& grid, const ParamVector& g,
                       const GateTarget& gate) {
    return evaluate(kind, gen, grid, g.to_controls(), gate);
}

}  // namespace qcl
