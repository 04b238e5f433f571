#pragma once

#include <vector>
#include <Eigen/Dense>

#include "qcl/model.hpp"

namespace qcl {

struct ControlGrid {
    double T = 20.0;
    int K = 100;

    double dt() const { return T / K; }
    double t_left(int k) const { return k * dt(); }
    double t_right(int k) const { return (k + 1) * dt(); }
    void validate() const;
};

struct ControlVector {
    Eigen::VectorXd u, n1, n2;

    int size() const { return static_cast<int>(u.size()); }
    void validate() const;
};

struct ParamVector {
    Eigen::VectorXd u, w1, w2;

    int size() const { return static_cast<int>(u.size()); }
    ControlVector to_controls() const;
    Eigen::VectorXd flat() const;
    static ParamVector from_flat(const Eigen::VectorXd& g, int K);
};

struct Trajectory {
    std::vector<Mat16> psi;    // channel checkpoints, psi[0] = identity
    std::vector<Mat16> steps;  // exp(dt L_k) per interval
    std::vector<Vec16> x;      // state checkpoints when propagating a state
};

Mat16 step_generator(const GeneratorSet& gen, double u, double n1, double n2);
Mat16 matrix_exp(const Mat16& m);

Trajectory propagate_channel(const GeneratorSet& gen, const ControlGrid& grid,
                             const ControlVector& f);
Trajectory propagate_state(const GeneratorSet& gen, const ControlGrid& grid,
                           const ControlVector& f, const Vec16& x0,
                           bool require_state = true);

// Adaptive Runge-Kutta 4(5) integration of dx/dt = L(t) x, restarted on each
// control interval so the piecewise-constant generator stays smooth in between.
Vec16 ode_oracle(const GeneratorSet& gen, const ControlGrid& grid,
                 const ControlVector& f, const Vec16& x0, double tol = 1e-10);

}  // namespace qcl
