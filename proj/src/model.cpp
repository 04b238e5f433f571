#include "qcl/model.hpp"

#include <cmath>

namespace qcl {

namespace {

using CD = std::complex<double>;
constexpr CD kI{0.0, 1.0};

C2 pauli_x() {
    C2 m;
    m << 0, 1, 1, 0;
    return m;
}

C2 pauli_y() {
    C2 m;
    m << 0, -kI, kI, 0;
    return m;
}

C2 pauli_z() {
    C2 m;
    m << 1, 0, 0, -1;
    return m;
}

C2 id2() { return C2::Identity(); }

C4 kron(const C2& a, const C2& b) {
    C4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

// Raising/lowering with sigma^+ = |1><0|, sigma^- = |0><1|.
C2 sigma_plus() {
    C2 m;
    m << 0, 0, 1, 0;
    return m;
}

C2 sigma_minus() {
    C2 m;
    m << 0, 1, 0, 0;
    return m;
}

C4 qubit_op(const C2& op, int which) {
    return which == 0 ? kron(op, id2()) : kron(id2(), op);
}

C4 dissipator(const C4& l, const C4& rho) {
    C4 ld = l.adjoint();
    return 2.0 * l * rho * ld - ld * l * rho - rho * ld * l;
}

}  // namespace

Vec16 realify(const C4& rho, double herm_tol) {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > herm_tol)
        throw std::invalid_argument("realify: matrix is not Hermitian");
    Vec16 x;
    for (int c = 0; c < 16; ++c) {
        const auto& l = kLayout[c];
        x(c) = l.imag ? rho(l.row, l.col).imag() : rho(l.row, l.col).real();
    }
    return x;
}

C4 derealify(const Vec16& x) {
    C4 rho = C4::Zero();
    for (int c = 0; c < 16; ++c) {
        const auto& l = kLayout[c];
        if (l.row == l.col) {
            rho(l.row, l.col) += x(c);
        } else if (l.imag) {
            rho(l.row, l.col) += kI * x(c);
            rho(l.col, l.row) += -kI * x(c);
        } else {
            rho(l.row, l.col) += x(c);
            rho(l.col, l.row) += x(c);
        }
    }
    return rho;
}

C4 basis_element(int j) {
    Vec16 e = Vec16::Zero();
    e(j) = 1.0;
    return derealify(e);
}

double weighted_inner(const Vec16& x, const Vec16& y) {
    double s = 0.0;
    for (int j = 0; j < 16; ++j) s += kBeta[j] * x(j) * y(j);
    return s;
}

double weighted_channel_inner(const Mat16& a, const Mat16& b) {
    double s = 0.0;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) s += kBeta[i] / kBeta[j] * a(i, j) * b(i, j);
    return s;
}

void SystemSpec::validate() const {
    if (epsilon < 0) throw std::invalid_argument("SystemSpec: epsilon < 0");
    if (omega1 <= 0 || omega2 <= 0)
        throw std::invalid_argument("SystemSpec: omega_j must be positive");
    if (lambda1 <= 0 || lambda2 <= 0)
        throw std::invalid_argument("SystemSpec: lambda_j must be positive");
    if (cap_omega1 <= 0 || cap_omega2 <= 0)
        throw std::invalid_argument("SystemSpec: cap_omega_j must be positive");
    if (kind == SystemKind::System3 && alpha <= 0)
        throw std::invalid_argument("SystemSpec: alpha must be positive for System 3");
}

C4 SystemSpec::free_hamiltonian() const {
    C4 z1 = qubit_op(pauli_z(), 0), z2 = qubit_op(pauli_z(), 1);
    switch (kind) {
        case SystemKind::System1:
        case SystemKind::System2:
            return 0.5 * omega1 * z1 + 0.5 * omega2 * z2;
        case SystemKind::System3:
            return z1 + z2 +
                   alpha * (kron(pauli_y(), pauli_y()) + kron(pauli_z(), pauli_z()));
    }
    throw std::logic_error("SystemSpec: bad kind");
}

C4 SystemSpec::control_hamiltonian() const {
    switch (kind) {
        case SystemKind::System1:
            return qubit_op(pauli_x(), 0) + qubit_op(pauli_x(), 1);
        case SystemKind::System2:
            return kron(pauli_x(), pauli_x());
        case SystemKind::System3:
            return qubit_op(pauli_x(), 0);
    }
    throw std::logic_error("SystemSpec: bad kind");
}

SystemSpec make_system(int id, double epsilon) {
    if (id < 1 || id > 3) throw std::invalid_argument("make_system: id must be 1..3");
    SystemSpec s;
    s.kind = static_cast<SystemKind>(id);
    s.epsilon = epsilon;
    s.validate();
    return s;
}

GeneratorSet build_generators(const SystemSpec& spec) {
    spec.validate();
    const C4 hs = spec.free_hamiltonian();
    const C4 v = spec.control_hamiltonian();
    const double eps = spec.epsilon;
    const std::array<double, 2> lam = {spec.lambda1, spec.lambda2};
    const std::array<double, 2> com = {spec.cap_omega1, spec.cap_omega2};

    auto commutator_part = [](const C4& h, const C4& rho) -> C4 {
        return -kI * (h * rho - rho * h);
    };

    // A: free Hamiltonian plus the spontaneous-emission dissipator.
    auto a_rhs = [&](const C4& rho) -> C4 {
        C4 out = commutator_part(hs, rho);
        for (int q = 0; q < 2; ++q)
            out += eps * com[q] * dissipator(qubit_op(sigma_minus(), q), rho);
        return out;
    };
    auto bu_rhs = [&](const C4& rho) -> C4 { return commutator_part(v, rho); };
    // B_n: Lamb shift plus stimulated emission and absorption, per qubit.
    auto bn_rhs = [&](int q, const C4& rho) -> C4 {
        C4 out = eps * lam[q] * commutator_part(qubit_op(pauli_z(), q), rho);
        out += eps * com[q] * dissipator(qubit_op(sigma_minus(), q), rho);
        out += eps * com[q] * dissipator(qubit_op(sigma_plus(), q), rho);
        return out;
    };

    GeneratorSet g;
    for (int j = 0; j < 16; ++j) {
        const C4 m = basis_element(j);
        g.A.col(j) = realify(a_rhs(m), 1e-9);
        g.B_u.col(j) = realify(bu_rhs(m), 1e-9);
        g.B_n1.col(j) = realify(bn_rhs(0, m), 1e-9);
        g.B_n2.col(j) = realify(bn_rhs(1, m), 1e-9);
    }
    return g;
}

C4 cnot_matrix() {
    C4 u = C4::Zero();
    u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1.0;
    return u;
}

C4 cphase_matrix(double lambda) {
    C4 u = C4::Identity();
    u(3, 3) = std::exp(kI * lambda);
    return u;
}

Mat16 gate_channel_matrix(const C4& u, double unitary_tol) {
    if ((u * u.adjoint() - C4::Identity()).cwiseAbs().maxCoeff() > unitary_tol)
        throw std::invalid_argument("gate_channel_matrix: matrix is not unitary");
    Mat16 psi;
    for (int j = 0; j < 16; ++j)
        psi.col(j) = realify(u * basis_element(j) * u.adjoint(), 1e-9);
    return psi;
}

GateTarget make_gate(GateKind kind, double lambda) {
    GateTarget g;
    g.kind = kind;
    g.lambda = lambda;
    g.u_matrix = kind == GateKind::CNOT ? cnot_matrix() : cphase_matrix(lambda);
    g.psi_u = gate_channel_matrix(g.u_matrix);
    const auto& ss = special_states();
    for (int m = 0; m < 3; ++m) g.target_states[m] = g.psi_u * ss.x[m];
    return g;
}

const SpecialStates& special_states() {
    static const SpecialStates ss = [] {
        SpecialStates s;
        s.rho1 = C4::Zero();
        s.rho1(0, 0) = 2.0 / 5.0;
        s.rho1(1, 1) = 3.0 / 10.0;
        s.rho1(2, 2) = 1.0 / 5.0;
        s.rho1(3, 3) = 1.0 / 10.0;
        s.rho2 = C4::Constant(CD{0.25, 0.0});
        s.rho3 = 0.25 * C4::Identity();
        s.x = {realify(s.rho1), realify(s.rho2), realify(s.rho3)};
        return s;
    }();
    return ss;
}

}  // namespace qcl
