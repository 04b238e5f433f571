#include "qcl/gradients.hpp"

#include <cmath>
#include <stdexcept>

namespace qcl {

namespace {

Mat16 mat_pow(const Mat16& base, int n) {
    Mat16 result = Mat16::Identity();
    Mat16 sq = base;
    while (n > 0) {
        if (n & 1) result = sq * result;
        sq = sq * sq;
        n >>= 1;
    }
    return result;
}

struct StepFactors {
    std::vector<Mat16> small;  // exp(dt/S L_k)
    std::vector<Mat16> full;   // exp(dt L_k)
};

StepFactors step_factors(const GeneratorSet& gen, const ControlGrid& grid,
                         const ControlVector& f, int segments) {
    const double dt = grid.dt();
    StepFactors sf;
    sf.small.reserve(grid.K);
    sf.full.reserve(grid.K);
    for (int k = 0; k < grid.K; ++k) {
        const Mat16 l = step_generator(gen, f.u(k), f.n1(k), f.n2(k));
        sf.small.push_back(matrix_exp(dt / segments * l));
        sf.full.push_back(mat_pow(sf.small.back(), segments));
    }
    return sf;
}

// Trapezoid aggregation for one interval: P = sum_j w_j (e^j V)(e^{S-j,T} Z)^T,
// so that dt*Tr(B P) is the trapezoid approximation of the pairing of Z with
// the dexp-integral derivative applied to checkpoint V.
template <int Cols>
Mat16 interval_pairing(const Mat16& e_small, int segments,
                       const Eigen::Matrix<double, 16, Cols>& v0,
                       const Eigen::Matrix<double, 16, Cols>& z0) {
    using Block = Eigen::Matrix<double, 16, Cols>;
    std::vector<Block> vs(segments + 1), zs(segments + 1);
    vs[0] = v0;
    zs[0] = z0;
    const Mat16 et = e_small.transpose();
    for (int j = 0; j < segments; ++j) {
        vs[j + 1] = e_small * vs[j];
        zs[j + 1] = et * zs[j];
    }
    Mat16 p = Mat16::Zero();
    for (int j = 0; j <= segments; ++j) {
        const double w = (j == 0 || j == segments) ? 0.5 : 1.0;
        p.noalias() += (w / segments) * vs[j] * zs[segments - j].transpose();
    }
    return p;
}

double trace_product(const Mat16& a, const Mat16& b) {
    return a.cwiseProduct(b.transpose()).sum();
}

}  // namespace

void GradOptions::validate() const {
    if (segments < 1) throw std::invalid_argument("GradOptions: segments must be >= 1");
    if (fd_step <= 0) throw std::invalid_argument("GradOptions: fd_step must be > 0");
}

Mat16 dexp_integral(const Mat16& l, const Mat16& b, double dt, int segments) {
    if (segments < 1) throw std::invalid_argument("dexp_integral: segments must be >= 1");
    const Mat16 e = matrix_exp(dt / segments * l);
    std::vector<Mat16> pow(segments + 1);
    pow[0] = Mat16::Identity();
    for (int j = 0; j < segments; ++j) pow[j + 1] = e * pow[j];
    Mat16 out = Mat16::Zero();
    for (int j = 0; j <= segments; ++j) {
        const double w = (j == 0 || j == segments) ? 0.5 : 1.0;
        out.noalias() += (w / segments) * pow[segments - j] * b * pow[j];
    }
    return dt * out;
}

std::vector<std::array<Mat16, 3>> grad_channel(const GeneratorSet& gen,
                                               const ControlGrid& grid,
                                               const ControlVector& f,
                                               const GradOptions& opts) {
    grid.validate();
    f.validate();
    opts.validate();
    if (f.size() != grid.K)
        throw std::invalid_argument("grad_channel: control length != K");
    const double dt = grid.dt();
    const StepFactors sf = step_factors(gen, grid, f, opts.segments);

    std::vector<Mat16> left(grid.K + 1);  // Psi_{t_k}
    left[0] = Mat16::Identity();
    for (int k = 0; k < grid.K; ++k) left[k + 1] = sf.full[k] * left[k];
    std::vector<Mat16> right(grid.K + 1);  // Psi_{t_k, T}, reverse accumulation
    right[grid.K] = Mat16::Identity();
    for (int k = grid.K - 1; k >= 0; --k) right[k] = right[k + 1] * sf.full[k];

    std::vector<std::array<Mat16, 3>> out(grid.K);
    const std::array<const Mat16*, 3> bs = {&gen.B_u, &gen.B_n1, &gen.B_n2};
    for (int k = 0; k < grid.K; ++k) {
        const Mat16 l = step_generator(gen, f.u(k), f.n1(k), f.n2(k));
        for (int mu = 0; mu < 3; ++mu)
            out[k][mu] = right[k + 1] * dexp_integral(l, *bs[mu], dt, opts.segments) * left[k];
    }
    return out;
}

ObjectiveEval eval_with_gradient(ObjectiveKind kind, const GeneratorSet& gen,
                                 const ControlGrid& grid, const ParamVector& g,
                                 const GateTarget& gate, const GradOptions& opts) {
    grid.validate();
    opts.validate();
    const int K = grid.K;
    if (g.size() != K)
        throw std::invalid_argument("eval_with_gradient: parameter length != K");
    const ControlVector f = g.to_controls();
    const double dt = grid.dt();
    const int S = opts.segments;
    const StepFactors sf = step_factors(gen, grid, f, S);

    ObjectiveEval res;
    res.grad.resize(3 * K);
    const Vec16 beta = Eigen::Map<const Vec16>(kBeta.data());

    auto fill_grad = [&](int k, const Mat16& p) {
        res.grad(k) = dt * trace_product(gen.B_u, p);
        res.grad(K + k) = 2.0 * g.w1(k) * dt * trace_product(gen.B_n1, p);
        res.grad(2 * K + k) = 2.0 * g.w2(k) * dt * trace_product(gen.B_n2, p);
    };

    if (kind == ObjectiveKind::SD) {
        std::vector<Mat16> left(K + 1);
        left[0] = Mat16::Identity();
        for (int k = 0; k < K; ++k) left[k + 1] = sf.full[k] * left[k];
        res.value = j_sd(left[K], gate);

        // Pairing matrix for the channel inner product: Z_ij = beta_i/beta_j R_ij / 16.
        const Mat16 r = left[K] - gate.psi_u;
        Mat16 z;
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) z(i, j) = kBeta[i] / kBeta[j] * r(i, j) / 16.0;
        std::vector<Mat16> zc(K + 1);
        zc[K] = z;
        for (int k = K - 1; k >= 0; --k) zc[k] = sf.full[k].transpose() * zc[k + 1];
        for (int k = 0; k < K; ++k)
            fill_grad(k, interval_pairing<16>(sf.small[k], S, left[k], zc[k + 1]));
        return res;
    }

    using Mat163 = Eigen::Matrix<double, 16, 3>;
    const auto& ss = special_states();
    std::vector<Mat163> left(K + 1);
    for (int m = 0; m < 3; ++m) left[0].col(m) = ss.x[m];
    for (int k = 0; k < K; ++k) left[k + 1] = sf.full[k] * left[k];
    const std::array<Vec16, 3> fin = {left[K].col(0), left[K].col(1), left[K].col(2)};

    Mat163 z;
    if (kind == ObjectiveKind::GRK_SD) {
        res.value = j_grk_sd(fin, gate);
        for (int m = 0; m < 3; ++m)
            z.col(m) = beta.cwiseProduct(Vec16(fin[m] - gate.target_states[m])) / 3.0;
    } else {
        res.value = j_grk_sp(fin, gate);
        for (int m = 0; m < 3; ++m)
            z.col(m) = -beta.cwiseProduct(gate.target_states[m]) /
                       (3.0 * weighted_norm2(ss.x[m]));
    }
    std::vector<Mat163> zc(K + 1);
    zc[K] = z;
    for (int k = K - 1; k >= 0; --k) zc[k] = sf.full[k].transpose() * zc[k + 1];
    for (int k = 0; k < K; ++k)
        fill_grad(k, interval_pairing<3>(sf.small[k], S, left[k], zc[k + 1]));
    return res;
}

Eigen::VectorXd fd_gradient(ObjectiveKind kind, const GeneratorSet& gen,
                            const ControlGrid& grid, const ParamVector& g,
                            const GateTarget& gate, double step) {
    if (step <= 0) throw std::invalid_argument("fd_gradient: step must be > 0");
    const int K = grid.K;
    Eigen::VectorXd flat = g.flat();
    Eigen::VectorXd out(3 * K);
    for (int i = 0; i < 3 * K; ++i) {
        Eigen::VectorXd gp = flat, gm = flat;
        gp(i) += step;
        gm(i) -= step;
        const double fp =
            evaluate_params(kind, gen, grid, ParamVector::from_flat(gp, K), gate);
        const double fm =
            evaluate_params(kind, gen, grid, ParamVector::from_flat(gm, K), gate);
        out(i) = (fp - fm) / (2.0 * step);
    }
    return out;
}

Eigen::MatrixXd fd_hessian(ObjectiveKind kind, const GeneratorSet& gen,
                           const ControlGrid& grid, const ParamVector& g,
                           const GateTarget& gate, double step,
                           const GradOptions& opts) {
    if (step <= 0) throw std::invalid_argument("fd_hessian: step must be > 0");
    const int K = grid.K;
    Eigen::VectorXd flat = g.flat();
    Eigen::MatrixXd h(3 * K, 3 * K);
    for (int i = 0; i < 3 * K; ++i) {
        Eigen::VectorXd gp = flat, gm = flat;
        gp(i) += step;
        gm(i) -= step;
        const Eigen::VectorXd dp =
            grad_objective(kind, gen, grid, ParamVector::from_flat(gp, K), gate, opts);
        const Eigen::VectorXd dm =
            grad_objective(kind, gen, grid, ParamVector::from_flat(gm, K), gate, opts);
        h.row(i) = ((dp - dm) / (2.0 * step)).transpose();
    }
    return 0.5 * (h + h.transpose());
}

}  // namespace qcl
