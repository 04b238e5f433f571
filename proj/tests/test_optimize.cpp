#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <optional>

#include "qcl/gradients.hpp"
#include "qcl/model.hpp"
#include "qcl/objectives.hpp"
#include "qcl/optimize.hpp"
#include "qcl/rng.hpp"

using namespace qcl;

namespace {

constexpr double kPi = 3.14159265358979323846;

double stop_norm_of(const Eigen::VectorXd& grad, const ControlGrid& grid) {
    return grad.norm() / std::sqrt(grid.dt());
}

}  // namespace

TEST_CASE("parameter validation rejects nonsense") {
    GrapeParams gp;
    gp.h0 = 0.0;
    CHECK_THROWS(gp.validate());
    gp = GrapeParams{};
    gp.a = 0.9;
    CHECK_THROWS(gp.validate());
    gp = GrapeParams{};
    gp.beta_step = 1.0;
    CHECK_THROWS(gp.validate());
    gp = GrapeParams{};
    gp.eps_acc = 0.0;
    CHECK_THROWS(gp.validate());
    gp = GrapeParams{};
    gp.max_iter = -1;
    CHECK_THROWS(gp.validate());
    CHECK_NOTHROW(GrapeParams{}.validate());

    AnnealParams ap;
    ap.initial_temp = 0.0;
    CHECK_THROWS(ap.validate());
    ap = AnnealParams{};
    ap.qv = 1.0;
    CHECK_THROWS(ap.validate());
    ap = AnnealParams{};
    ap.qa = 1.0;
    CHECK_THROWS(ap.validate());
    ap = AnnealParams{};
    ap.restart_temp_ratio = 1.5;
    CHECK_THROWS(ap.validate());
    ap = AnnealParams{};
    ap.u_max = -1.0;
    CHECK_THROWS(ap.validate());
    CHECK_NOTHROW(AnnealParams{}.validate());
}

TEST_CASE("reference initial guess samples the documented profiles") {
    const ControlGrid grid{20.0, 100};
    const ParamVector g = default_initial_guess(grid);
    REQUIRE(g.size() == grid.K);
    for (int k : {0, 49, 99}) {
        const double t = (k + 1) * grid.dt();
        CHECK(g.u(k) == doctest::Approx(std::cos(0.3 * t)).epsilon(1e-15));
        const double w = std::exp(-5.0 * std::pow(t / grid.T - 0.5, 2));
        CHECK(g.w1(k) == doctest::Approx(w).epsilon(1e-15));
        CHECK(g.w2(k) == doctest::Approx(w).epsilon(1e-15));
    }
}

TEST_CASE("a huge accuracy threshold stops before the first step") {
    const ControlGrid grid{4.0, 10};
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    const GateTarget gate = make_gate(GateKind::CNOT);
    const ParamVector g0 = default_initial_guess(grid);
    GrapeParams params;
    params.eps_acc = 10.0;
    const RunRecord rec =
        ingrape_run(ObjectiveKind::GRK_SD, gen, grid, g0, gate, params);
    CHECK(rec.iterations == 0);
    CHECK(rec.termination == "grad_tol");
    CHECK((rec.g.flat() - g0.flat()).norm() == 0.0);
    CHECK(rec.final_value ==
          doctest::Approx(evaluate_params(ObjectiveKind::GRK_SD, gen, grid, g0, gate))
              .epsilon(1e-15));
    REQUIRE(rec.history.size() == 1);
}

TEST_CASE("descent history decreases strictly and ends at the reported value") {
    const ControlGrid grid{4.0, 20};
    const GeneratorSet gen = build_generators(make_system(2, 0.1));
    const GateTarget gate = make_gate(GateKind::CPHASE, kPi);
    GrapeParams params;
    params.eps_acc = 5e-3;
    params.max_iter = 300;
    const RunRecord rec = ingrape_run(ObjectiveKind::GRK_SD, gen, grid,
                                      default_initial_guess(grid), gate, params);
    REQUIRE(rec.history.size() >= 2);
    for (size_t i = 1; i < rec.history.size(); ++i)
        CHECK(rec.history[i] < rec.history[i - 1]);
    CHECK(rec.final_value == rec.history.back());
    CHECK(rec.iterations == static_cast<int>(rec.history.size()) - 1);
}

TEST_CASE("reported gradient norm matches the grid-invariant convention") {
    const ControlGrid grid{4.0, 16};
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    const GateTarget gate = make_gate(GateKind::CNOT);
    GrapeParams params;
    params.eps_acc = 1e-2;
    params.max_iter = 50;
    const RunRecord rec = ingrape_run(ObjectiveKind::GRK_SD, gen, grid,
                                      default_initial_guess(grid), gate, params);
    const Eigen::VectorXd grad =
        grad_objective(ObjectiveKind::GRK_SD, gen, grid, rec.g, gate, params.grad);
    CHECK(rec.grad_norm ==
          doctest::Approx(stop_norm_of(grad, grid)).epsilon(1e-12));
    if (rec.termination == "grad_tol") CHECK(rec.grad_norm < params.eps_acc);
}

TEST_CASE("gradient descent is deterministic") {
    const ControlGrid grid{4.0, 12};
    const GeneratorSet gen = build_generators(make_system(3, 0.1));
    const GateTarget gate = make_gate(GateKind::CNOT);
    GrapeParams params;
    params.eps_acc = 1e-2;
    params.max_iter = 120;
    const RunRecord a = ingrape_run(ObjectiveKind::GRK_SD, gen, grid,
                                    default_initial_guess(grid), gate, params);
    const RunRecord b = ingrape_run(ObjectiveKind::GRK_SD, gen, grid,
                                    default_initial_guess(grid), gate, params);
    CHECK(a.final_value == b.final_value);
    CHECK(a.iterations == b.iterations);
    CHECK((a.g.flat() - b.g.flat()).norm() == 0.0);
}

TEST_CASE("full-scale descent reaches the documented basin for system one") {
    const ControlGrid grid{20.0, 100};
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    const GateTarget gate = make_gate(GateKind::CNOT);
    const RunRecord rec = ingrape_run(ObjectiveKind::GRK_SD, gen, grid,
                                      default_initial_guess(grid), gate,
                                      GrapeParams{});
    CHECK(std::abs(rec.history.front() - 0.109) < 0.002);
    CHECK(std::abs(rec.final_value - 0.048) < 0.010);
    CHECK(rec.termination == "grad_tol");
}

TEST_CASE("full-scale descent reaches the documented basin for system two") {
    const ControlGrid grid{20.0, 100};
    const GeneratorSet gen = build_generators(make_system(2, 0.1));
    const GateTarget gate = make_gate(GateKind::CPHASE, kPi);
    const RunRecord rec = ingrape_run(ObjectiveKind::GRK_SD, gen, grid,
                                      default_initial_guess(grid), gate,
                                      GrapeParams{});
    CHECK(std::abs(rec.final_value - 0.059) < 0.012);
    CHECK(rec.termination == "grad_tol");
}

TEST_CASE("annealing with a one-evaluation budget returns the initial cost") {
    const ControlGrid grid{4.0, 10};
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    const GateTarget gate = make_gate(GateKind::CNOT);
    AnnealParams params;
    params.maxfun = 1;
    params.seed = 11;
    const ControlVector f0 = default_initial_guess(grid).to_controls();
    const RunRecord rec =
        anneal_run(ObjectiveKind::GRK_SD, gen, grid, f0, gate, params);
    CHECK(rec.nfev == 1);
    CHECK(rec.termination == "maxfun");
    CHECK(rec.final_value ==
          doctest::Approx(evaluate(ObjectiveKind::GRK_SD, gen, grid, f0, gate))
              .epsilon(1e-15));
}

TEST_CASE("annealing improves on the initial point within a small budget") {
    const ControlGrid grid{4.0, 20};
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    const GateTarget gate = make_gate(GateKind::CNOT);
    AnnealParams params;
    params.maxfun = 3000;
    params.seed = 5;
    const ControlVector f0 = default_initial_guess(grid).to_controls();
    const double initial = evaluate(ObjectiveKind::GRK_SD, gen, grid, f0, gate);
    const RunRecord rec =
        anneal_run(ObjectiveKind::GRK_SD, gen, grid, f0, gate, params);
    CHECK(rec.final_value <= initial);
    CHECK(rec.nfev <= params.maxfun);
    REQUIRE(!rec.history.empty());
    CHECK(rec.history.front() == doctest::Approx(initial).epsilon(1e-15));
    for (size_t i = 1; i < rec.history.size(); ++i)
        CHECK(rec.history[i] < rec.history[i - 1]);
    CHECK(rec.final_value == rec.history.back());
}

TEST_CASE("annealing keeps the final controls inside the search box") {
    const ControlGrid grid{4.0, 15};
    const GeneratorSet gen = build_generators(make_system(2, 0.1));
    const GateTarget gate = make_gate(GateKind::CPHASE, kPi);
    AnnealParams params;
    params.maxfun = 2000;
    params.seed = 17;
    const RunRecord rec =
        anneal_run(ObjectiveKind::GRK_SD, gen, grid, std::nullopt, gate, params);
    for (int k = 0; k < grid.K; ++k) {
        CHECK(std::abs(rec.f.u(k)) <= params.u_max + 1e-12);
        CHECK(rec.f.n1(k) >= 0.0);
        CHECK(rec.f.n1(k) <= params.n_max + 1e-12);
        CHECK(rec.f.n2(k) >= 0.0);
        CHECK(rec.f.n2(k) <= params.n_max + 1e-12);
    }
}

TEST_CASE("annealing is reproducible for a fixed seed and diverges across seeds") {
    const ControlGrid grid{4.0, 10};
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    const GateTarget gate = make_gate(GateKind::CNOT);
    AnnealParams params;
    params.maxfun = 1500;
    params.seed = 23;
    const RunRecord a =
        anneal_run(ObjectiveKind::GRK_SD, gen, grid, std::nullopt, gate, params);
    const RunRecord b =
        anneal_run(ObjectiveKind::GRK_SD, gen, grid, std::nullopt, gate, params);
    CHECK(a.final_value == b.final_value);
    CHECK((a.f.u - b.f.u).norm() == 0.0);
    CHECK((a.f.n1 - b.f.n1).norm() == 0.0);
    params.seed = 24;
    const RunRecord c =
        anneal_run(ObjectiveKind::GRK_SD, gen, grid, std::nullopt, gate, params);
    CHECK(c.final_value != a.final_value);
}

TEST_CASE("annealing validates the initial control length") {
    const ControlGrid grid{4.0, 10};
    const GeneratorSet gen = build_generators(make_system(1, 0.1));
    const GateTarget gate = make_gate(GateKind::CNOT);
    ControlVector f0;
    f0.u = Eigen::VectorXd::Zero(5);
    f0.n1 = Eigen::VectorXd::Zero(5);
    f0.n2 = Eigen::VectorXd::Zero(5);
    CHECK_THROWS(
        anneal_run(ObjectiveKind::GRK_SD, gen, grid, f0, gate, AnnealParams{}));
}
