#include "qcl/propagator.hpp"

#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace qcl {

void ControlGrid::validate() const {
    if (T <= 0) throw std::invalid_argument("ControlGrid: T must be positive");
    if (K < 1) throw std::invalid_argument("ControlGrid: K must be >= 1");
}

void ControlVector::validate() const {
    if (n1.size() != u.size() || n2.size() != u.size())
        throw std::invalid_argument("ControlVector: component lengths differ");
    if (n1.size() && (n1.minCoeff() < 0 || n2.minCoeff() < 0))
        throw std::invalid_argument("ControlVector: incoherent controls must be >= 0");
}

ControlVector ParamVector::to_controls() const {
    ControlVector f;
    f.u = u;
    f.n1 = w1.cwiseProduct(w1);
    f.n2 = w2.cwiseProduct(w2);
    return f;
}

Eigen::VectorXd ParamVector::flat() const {
    const int k = size();
    Eigen::VectorXd g(3 * k);
    g.segment(0, k) = u;
    g.segment(k, k) = w1;
    g.segment(2 * k, k) = w2;
    return g;
}

ParamVector ParamVector::from_flat(const Eigen::VectorXd& g, int K) {
    if (g.size() != 3 * K)
        throw std::invalid_argument("ParamVector: flat vector must have length 3K");
    ParamVector p;
    p.u = g.segment(0, K);
    p.w1 = g.segment(K, K);
    p.w2 = g.segment(2 * K, K);
    return p;
}

Mat16 step_generator(const GeneratorSet& gen, double u, double n1, double n2) {
    if (n1 < 0 || n2 < 0)
        throw std::invalid_argument("step_generator: incoherent controls must be >= 0");
    return gen.A + u * gen.B_u + n1 * gen.B_n1 + n2 * gen.B_n2;
}

Mat16 matrix_exp(const Mat16& m) {
    if (!m.allFinite()) throw std::invalid_argument("matrix_exp: non-finite entries");
    return m.exp();
}

Trajectory propagate_channel(const GeneratorSet& gen, const ControlGrid& grid,
                             const ControlVector& f) {
    grid.validate();
    f.validate();
    if (f.size() != grid.K)
        throw std::invalid_argument("propagate_channel: control length != K");
    const double dt = grid.dt();
    Trajectory tr;
    tr.psi.reserve(grid.K + 1);
    tr.steps.reserve(grid.K);
    tr.psi.push_back(Mat16::Identity());
    for (int k = 0; k < grid.K; ++k) {
        tr.steps.push_back(matrix_exp(dt * step_generator(gen, f.u(k), f.n1(k), f.n2(k))));
        tr.psi.push_back(tr.steps.back() * tr.psi.back());
    }
    return tr;
}

Trajectory propagate_state(const GeneratorSet& gen, const ControlGrid& grid,
                           const ControlVector& f, const Vec16& x0,
                           bool require_state) {
    grid.validate();
    f.validate();
    if (f.size() != grid.K)
        throw std::invalid_argument("propagate_state: control length != K");
    if (require_state) {
        double tr = 0.0;
        for (int c : kTraceCoords) tr += x0(c);
        if (std::abs(tr - 1.0) > 1e-9)
            throw std::invalid_argument("propagate_state: initial state trace != 1");
        Eigen::SelfAdjointEigenSolver<C4> es(derealify(x0));
        if (es.eigenvalues().minCoeff() < -1e-9)
            throw std::invalid_argument("propagate_state: initial state not positive");
    }
    const double dt = grid.dt();
    Trajectory tr;
    tr.x.reserve(grid.K + 1);
    tr.x.push_back(x0);
    for (int k = 0; k < grid.K; ++k) {
        const Mat16 e = matrix_exp(dt * step_generator(gen, f.u(k), f.n1(k), f.n2(k)));
        tr.x.push_back(e * tr.x.back());
    }
    return tr;
}

namespace {

// Dormand-Prince 5(4) embedded pair.
Vec16 rk45_interval(const Mat16& l, Vec16 x, double span, double tol) {
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                     a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                     b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    double t = 0.0;
    double h = span;
    while (t < span) {
        if (t + h > span) h = span - t;
        const Vec16 k1 = l * x;
        const Vec16 k2 = l * (x + h * a21 * k1);
        const Vec16 k3 = l * (x + h * (a31 * k1 + a32 * k2));
        const Vec16 k4 = l * (x + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vec16 k5 = l * (x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vec16 k6 =
            l * (x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vec16 x5 = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Vec16 k7 = l * x5;
        const Vec16 err =
            h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double scale = 0.0;
        for (int i = 0; i < 16; ++i) {
            const double s = tol + tol * std::max(std::abs(x(i)), std::abs(x5(i)));
            scale = std::max(scale, std::abs(err(i)) / s);
        }
        if (scale <= 1.0) {
            t += h;
            x = x5;
        }
        const double grow = scale > 0 ? 0.9 * std::pow(scale, -0.2) : 5.0;
        h *= std::min(5.0, std::max(0.2, grow));
        if (h < 1e-14 * span)
            throw std::runtime_error("ode_oracle: step size underflow");
    }
    return x;
}

}  // namespace

Vec16 ode_oracle(const GeneratorSet& gen, const ControlGrid& grid,
                 const ControlVector& f, const Vec16& x0, double tol) {
    grid.validate();
    f.validate();
    if (f.size() != grid.K)
        throw std::invalid_argument("ode_oracle: control length != K");
    if (tol <= 0) throw std::invalid_argument("ode_oracle: tol must be positive");
    Vec16 x = x0;
    for (int k = 0; k < grid.K; ++k) {
        const Mat16 l = step_generator(gen, f.u(k), f.n1(k), f.n2(k));
        x = rk45_interval(l, x, grid.dt(), tol);
    }
    return x;
}

}  // namespace qcl
