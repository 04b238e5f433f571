#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "qcl/model.hpp"
#include "qcl/propagator.hpp"
#include "qcl/rng.hpp"

using namespace qcl;
using std::complex;

namespace {

ControlVector random_controls(RngStream& rng, int K, double u_scale = 1.0,
                              double n_scale = 1.0) {
    ControlVector f;
    f.u.resize(K);
    f.n1.resize(K);
    f.n2.resize(K);
    for (int k = 0; k < K; ++k) {
        f.u(k) = rng.uniform(-u_scale, u_scale);
        f.n1(k) = n_scale * rng.uniform01();
        f.n2(k) = n_scale * rng.uniform01();
    }
    return f;
}

ControlVector zero_controls(int K) {
    ControlVector f;
    f.u = Eigen::VectorXd::Zero(K);
    f.n1 = Eigen::VectorXd::Zero(K);
    f.n2 = Eigen::VectorXd::Zero(K);
    return f;
}

Mat16 taylor_exp(const Mat16& m, int terms = 50) {
    Mat16 sum = Mat16::Identity();
    Mat16 pow = Mat16::Identity();
    for (int n = 1; n <= terms; ++n) {
        pow = (pow * m / static_cast<double>(n)).eval();
        sum += pow;
    }
    return sum;
}

}  // namespace

TEST_CASE("step generator assembles the affine decomposition") {
    for (int sys = 1; sys <= 3; ++sys) {
        const GeneratorSet gen = build_generators(make_system(sys, 0.1));
        CHECK((step_generator(gen, 0.0, 0.0, 0.0) - gen.A).norm() == 0.0);
        const Mat16 l1 = step_generator(gen, 1.3, 0.2, 0.7);
        const Mat16 l2 = step_generator(gen, 2.6, 0.2, 0.7);
        CHECK((l2 - l1 - 1.3 * gen.B_u).norm() < 1e-14);
        const Mat16 l3 = step_generator(gen, 1.3, 0.9, 0.7);
        CHECK((l3 - l1 - 0.7 * gen.B_n1).norm() < 1e-14);
    }
}

TEST_CASE("step generator rejects negative photon numbers") {
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    CHECK_THROWS(step_generator(gen, 0.0, -0.1, 0.0));
    CHECK_THROWS(step_generator(gen, 0.0, 0.0, -1e-9));
}

TEST_CASE("generators annihilate the trace functional") {
    Eigen::RowVectorXd tau = Eigen::RowVectorXd::Zero(16);
    for (int c : kTraceCoords) tau(c) = 1.0;
    for (int sys = 1; sys <= 3; ++sys) {
        const GeneratorSet gen = build_generators(make_system(sys, 0.1));
        const Mat16 l = step_generator(gen, 0.8, 0.4, 1.1);
        CHECK((tau * l).norm() < 1e-13);
    }
}

TEST_CASE("matrix exponential of zero is the identity") {
    CHECK((matrix_exp(Mat16::Zero()) - Mat16::Identity()).norm() == 0.0);
}

TEST_CASE("matrix exponential of a diagonal matrix") {
    Mat16 d = Mat16::Zero();
    for (int i = 0; i < 16; ++i) d(i, i) = -0.1 * i;
    const Mat16 e = matrix_exp(d);
    for (int i = 0; i < 16; ++i)
        CHECK(e(i, i) == doctest::Approx(std::exp(-0.1 * i)).epsilon(1e-14));
    CHECK((e - e.diagonal().asDiagonal().toDenseMatrix()).norm() < 1e-15);
}

TEST_CASE("matrix exponential matches a long Taylor sum on bounded matrices") {
    RngStream rng(31, 0);
    for (int t = 0; t < 20; ++t) {
        Mat16 m;
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) m(i, j) = rng.normal();
        m /= m.norm();
        CHECK((matrix_exp(m) - taylor_exp(m)).norm() < 1e-13);
    }
}

TEST_CASE("matrix exponential rejects non-finite input") {
    Mat16 m = Mat16::Zero();
    m(3, 5) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(matrix_exp(m));
    m(3, 5) = std::numeric_limits<double>::infinity();
    CHECK_THROWS(matrix_exp(m));
}

TEST_CASE("channel propagation starts at the identity") {
    const ControlGrid grid{2.0, 5};
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    RngStream rng(32, 0);
    const Trajectory tr = propagate_channel(gen, grid, random_controls(rng, grid.K));
    REQUIRE(static_cast<int>(tr.psi.size()) == grid.K + 1);
    CHECK((tr.psi[0] - Mat16::Identity()).norm() == 0.0);
    REQUIRE(static_cast<int>(tr.steps.size()) == grid.K);
}

TEST_CASE("closed evolution reproduces the realified unitary conjugation") {
    const ControlGrid grid{4.0, 10};
    RngStream rng(33, 0);
    for (int sys = 1; sys <= 3; ++sys) {
        const SystemSpec spec = make_system(sys, 0.0);
        const GeneratorSet gen = build_generators(spec);
        const ControlVector f = random_controls(rng, grid.K, 2.0, 0.0);
        const Trajectory tr = propagate_channel(gen, grid, f);
        C4 u_total = C4::Identity();
        for (int k = 0; k < grid.K; ++k) {
            const C4 h = spec.free_hamiltonian() + f.u(k) * spec.control_hamiltonian();
            u_total = ((complex<double>(0, -grid.dt()) * h).exp() * u_total).eval();
        }
        CHECK((tr.psi.back() - gate_channel_matrix(u_total)).norm() < 1e-11);
    }
}

TEST_CASE("single-interval drift-only evolution matches the free unitary") {
    const ControlGrid grid{20.0, 1};
    const SystemSpec spec = make_system(1, 0.0);
    const GeneratorSet gen = build_generators(spec);
    const Trajectory tr = propagate_channel(gen, grid, zero_controls(1));
    const C4 u = (complex<double>(0, -grid.T) * spec.free_hamiltonian()).exp();
    CHECK((tr.psi.back() - gate_channel_matrix(u)).norm() < 1e-11);
}

TEST_CASE("channel columns agree with adaptive integration of basis states") {
    const ControlGrid grid{20.0, 100};
    RngStream rng(34, 0);
    for (int sys = 1; sys <= 3; ++sys) {
        const GeneratorSet gen = build_generators(make_system(sys, 0.1));
        const ControlVector f = random_controls(rng, grid.K);
        const Mat16 psi = propagate_channel(gen, grid, f).psi.back();
        for (int j : {0, 5, 12}) {
            Vec16 e = Vec16::Zero();
            e(j) = 1.0;
            const Vec16 ref = ode_oracle(gen, grid, f, e, 1e-10);
            CHECK((psi * e - ref).norm() < 1e-8);
        }
    }
}

TEST_CASE("semigroup composition over a split horizon") {
    const ControlGrid grid{8.0, 16};
    const ControlGrid half{4.0, 8};
    RngStream rng(35, 0);
    const GeneratorSet gen = build_generators(make_system(2, 0.1));
    const ControlVector f = random_controls(rng, grid.K);
    ControlVector f1, f2;
    f1.u = f.u.head(8);
    f1.n1 = f.n1.head(8);
    f1.n2 = f.n2.head(8);
    f2.u = f.u.tail(8);
    f2.n1 = f.n1.tail(8);
    f2.n2 = f.n2.tail(8);
    const Mat16 full = propagate_channel(gen, grid, f).psi.back();
    const Mat16 a = propagate_channel(gen, half, f1).psi.back();
    const Mat16 b = propagate_channel(gen, half, f2).psi.back();
    CHECK((full - b * a).norm() < 1e-12);
}

TEST_CASE("maximally mixed state is stationary under closed zero-control flow") {
    const ControlGrid grid{20.0, 40};
    const GeneratorSet gen = build_generators(make_system(3, 0.0));
    const Vec16 x0 = realify(C4::Identity() / 4.0);
    const Trajectory tr = propagate_state(gen, grid, zero_controls(grid.K), x0);
    CHECK((tr.x.back() - x0).norm() < 1e-13);
}

TEST_CASE("state propagation preserves trace and near-positivity") {
    const ControlGrid grid{20.0, 100};
    RngStream rng(36, 0);
    const SpecialStates& s = special_states();
    for (int sys = 1; sys <= 3; ++sys) {
        const GeneratorSet gen = build_generators(make_system(sys, 0.1));
        const ControlVector f = random_controls(rng, grid.K, 3.0, 2.0);
        for (int m = 0; m < 3; ++m) {
            const Trajectory tr = propagate_state(gen, grid, f, s.x[m]);
            REQUIRE(static_cast<int>(tr.x.size()) == grid.K + 1);
            for (int k = 0; k <= grid.K; k += 20) {
                const C4 rho = derealify(tr.x[k]);
                CHECK(std::abs(rho.trace().real() - 1.0) < 1e-12);
                Eigen::SelfAdjointEigenSolver<C4> es(rho);
                CHECK(es.eigenvalues().minCoeff() >= -1e-8);
            }
        }
    }
}

TEST_CASE("state propagation agrees with the adaptive oracle") {
    const ControlGrid grid{20.0, 100};
    RngStream rng(37, 0);
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    const ControlVector f = random_controls(rng, grid.K);
    const Vec16 x0 = special_states().x[0];
    const Vec16 got = propagate_state(gen, grid, f, x0).x.back();
    const Vec16 ref = ode_oracle(gen, grid, f, x0, 1e-10);
    CHECK((got - ref).norm() < 1e-8);
}

TEST_CASE("adaptive oracle with a zero generator returns the initial state") {
    const ControlGrid grid{5.0, 4};
    GeneratorSet gen;
    gen.A = Mat16::Zero();
    gen.B_u = Mat16::Zero();
    gen.B_n1 = Mat16::Zero();
    gen.B_n2 = Mat16::Zero();
    const Vec16 x0 = special_states().x[1];
    const Vec16 got = ode_oracle(gen, grid, zero_controls(grid.K), x0, 1e-12);
    CHECK((got - x0).norm() < 1e-12);
}

TEST_CASE("state propagation validates its input") {
    const ControlGrid grid{2.0, 4};
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    Vec16 bad = special_states().x[0];
    bad(0) += 0.5;  // trace 1.5
    CHECK_THROWS(propagate_state(gen, grid, zero_controls(grid.K), bad));
    ControlVector short_f = zero_controls(grid.K - 1);
    CHECK_THROWS(propagate_state(gen, grid, short_f, special_states().x[0]));
}

TEST_CASE("control grid validation") {
    CHECK_THROWS(ControlGrid{0.0, 10}.validate());
    CHECK_THROWS(ControlGrid{-1.0, 10}.validate());
    CHECK_THROWS(ControlGrid{1.0, 0}.validate());
    CHECK_NOTHROW(ControlGrid{20.0, 100}.validate());
}

TEST_CASE("parameter vector squares into photon numbers") {
    ParamVector g;
    g.u.resize(3);
    g.w1.resize(3);
    g.w2.resize(3);
    g.u << 1.0, -2.0, 0.5;
    g.w1 << 0.0, 1.5, -2.0;
    g.w2 << 3.0, -1.0, 0.25;
    const ControlVector f = g.to_controls();
    CHECK(f.u(1) == -2.0);
    CHECK(f.n1(1) == doctest::Approx(2.25).epsilon(1e-15));
    CHECK(f.n1(2) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(f.n2(0) == doctest::Approx(9.0).epsilon(1e-15));
    const Eigen::VectorXd flat = g.flat();
    REQUIRE(flat.size() == 9);
    const ParamVector back = ParamVector::from_flat(flat, 3);
    CHECK((back.u - g.u).norm() == 0.0);
    CHECK((back.w1 - g.w1).norm() == 0.0);
    CHECK((back.w2 - g.w2).norm() == 0.0);
}
