#pragma once

#include <array>
#include <complex>
#include <stdexcept>
#include <Eigen/Dense>

namespace qcl {

using Mat16 = Eigen::Matrix<double, 16, 16>;
using Vec16 = Eigen::Matrix<double, 16, 1>;
using C4 = Eigen::Matrix4cd;
using C2 = Eigen::Matrix2cd;

// Hermitian 4x4 matrices are stored as 16 real coordinates: the diagonal and,
// for each upper-triangle entry (i<j) in row-major order, its real and
// imaginary parts. beta holds the squared Hilbert-Schmidt norms of the
// corresponding basis elements.
struct Layout {
    int row, col;
    bool imag;
};

inline constexpr std::array<Layout, 16> kLayout = {{
    {0, 0, false}, {0, 1, false}, {0, 1, true}, {0, 2, false}, {0, 2, true},
    {0, 3, false}, {0, 3, true}, {1, 1, false}, {1, 2, false}, {1, 2, true},
    {1, 3, false}, {1, 3, true}, {2, 2, false}, {2, 3, false}, {2, 3, true},
    {3, 3, false},
}};

inline constexpr std::array<double, 16> kBeta = {1, 2, 2, 2, 2, 2, 2, 1,
                                                 2, 2, 2, 2, 1, 2, 2, 1};

inline constexpr std::array<int, 4> kTraceCoords = {0, 7, 12, 15};

Vec16 realify(const C4& rho, double herm_tol = 1e-12);
C4 derealify(const Vec16& x);
C4 basis_element(int j);

double weighted_inner(const Vec16& x, const Vec16& y);
double weighted_channel_inner(const Mat16& a, const Mat16& b);

inline double weighted_norm2(const Vec16& x) { return weighted_inner(x, x); }

enum class SystemKind { System1 = 1, System2 = 2, System3 = 3 };

struct SystemSpec {
    SystemKind kind = SystemKind::System1;
    double omega1 = 1.0;
    double omega2 = 1.1;
    double alpha = 0.2;
    double lambda1 = 0.5;
    double lambda2 = 0.5;
    double cap_omega1 = 0.5;
    double cap_omega2 = 0.5;
    double epsilon = 0.1;

    void validate() const;
    C4 free_hamiltonian() const;
    C4 control_hamiltonian() const;
};

SystemSpec make_system(int id, double epsilon = 0.1);

// L(u, n1, n2) = A + u*B_u + n1*B_n1 + n2*B_n2, acting on realified states.
struct GeneratorSet {
    Mat16 A, B_u, B_n1, B_n2;
};

GeneratorSet build_generators(const SystemSpec& spec);

enum class GateKind { CNOT, CPHASE };

struct GateTarget {
    GateKind kind = GateKind::CNOT;
    double lambda = 0.0;
    C4 u_matrix;
    Mat16 psi_u;
    std::array<Vec16, 3> target_states;
};

C4 cnot_matrix();
C4 cphase_matrix(double lambda);
Mat16 gate_channel_matrix(const C4& u, double unitary_tol = 1e-12);
GateTarget make_gate(GateKind kind, double lambda = 0.0);

struct SpecialStates {
    C4 rho1, rho2, rho3;
    std::array<Vec16, 3> x;
};

const SpecialStates& special_states();

}  // namespace qcl
