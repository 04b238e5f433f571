#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qcl/gradients.hpp"
#include "qcl/io.hpp"
#include "qcl/landscape.hpp"
#include "qcl/model.hpp"
#include "qcl/objectives.hpp"
#include "qcl/optimize.hpp"
#include "qcl/propagator.hpp"

namespace fs = std::filesystem;
using namespace qcl;

namespace {

struct Options {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    int jobs = 1;

    std::uint64_t seed_or(std::uint64_t fallback) const {
        return seed.value_or(fallback);
    }

    std::optional<int> system;
    std::optional<std::string> gate;
    std::optional<std::string> objective;
    std::optional<double> lambda_over_pi;
    std::optional<double> eacc;
    std::optional<double> T;
    std::optional<int> K;
    std::optional<int> runs;

    std::string controls_file;
    std::string state = "rho1";
    bool oracle = false;

    std::string init = "default";
    double tol = 1e-4;
    std::optional<int> segments;
    bool all = false;
};

AppConfig effective_config(const Options& opt) {
    AppConfig cfg;
    if (!opt.config_file.empty()) cfg = load_config(opt.config_file);
    if (opt.system) {
        cfg.system = *opt.system;
        const double eps = cfg.spec.epsilon;
        cfg.spec = make_system(cfg.system, eps);
    }
    if (opt.gate) cfg.gate_kind = gate_from_name(*opt.gate);
    if (opt.objective) cfg.objective = objective_from_name(*opt.objective);
    if (opt.lambda_over_pi) cfg.lambda_over_pi = *opt.lambda_over_pi;
    if (opt.eacc) cfg.grape.eps_acc = *opt.eacc;
    if (opt.T) cfg.grid.T = *opt.T;
    if (opt.K) cfg.grid.K = *opt.K;
    if (opt.runs) cfg.landscape_runs = *opt.runs;
    if (opt.segments) cfg.grape.grad.segments = *opt.segments;
    cfg.anneal.grad = cfg.grape.grad;
    cfg.anneal.seed = opt.seed_or(0);
    if (opt.seed) cfg.master_seed = *opt.seed;
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    cfg.validate();
    return cfg;
}

// Records must not depend on where they are written, so the embedded snapshot
// carries the default output directory.
std::string config_snapshot(AppConfig cfg) {
    cfg.out_dir = AppConfig{}.out_dir;
    return config_to_json_text(cfg);
}

Vec16 pick_state(const std::string& name) {
    const SpecialStates& s = special_states();
    if (name == "rho1") return s.x[0];
    if (name == "rho2") return s.x[1];
    if (name == "rho3") return s.x[2];
    throw std::invalid_argument("unknown state '" + name + "' (rho1|rho2|rho3)");
}

int cmd_propagate(const Options& opt) {
    const AppConfig cfg = effective_config(opt);
    const ControlVector f = read_controls_csv(opt.controls_file);
    if (f.size() != cfg.grid.K)
        throw std::invalid_argument("controls csv: expected " +
                                    std::to_string(cfg.grid.K) + " rows, got " +
                                    std::to_string(f.size()));
    const GeneratorSet gen = build_generators(cfg.spec);
    const Vec16 x0 = pick_state(opt.state);
    const Trajectory traj = propagate_state(gen, cfg.grid, f, x0);

    const fs::path out = fs::path(cfg.out_dir) / "trajectory.csv";
    write_trajectory_csv(out, cfg.grid, traj.x);
    std::cout << "trajectory written to " << out.string() << "\n";

    if (opt.oracle) {
        const Vec16 ref = ode_oracle(gen, cfg.grid, f, x0);
        const double dev = (traj.x.back() - ref).cwiseAbs().maxCoeff();
        std::cout << "oracle max deviation " << dev << "\n";
    }
    return 0;
}

RunRecord run_grape(const AppConfig& cfg, const Options& opt) {
    const GeneratorSet gen = build_generators(cfg.spec);
    const ParamVector g0 = opt.init == "default"
                               ? default_initial_guess(cfg.grid)
                               : sample_initial(opt.seed_or(0), 0, cfg.grid.K);
    RunRecord rec = ingrape_run(cfg.objective, gen, cfg.grid, g0, cfg.gate(), cfg.grape);
    rec.seed = opt.seed_or(0);
    rec.config = config_snapshot(cfg);
    return rec;
}

int cmd_grape(const Options& opt) {
    if (opt.init != "default" && opt.init != "random")
        throw std::invalid_argument("--init must be default or random");
    const AppConfig cfg = effective_config(opt);
    const RunRecord rec = run_grape(cfg, opt);
    const fs::path out = fs::path(cfg.out_dir) / "run.json";
    write_run_record(out, rec);
    std::cout << "final value " << rec.final_value << " after " << rec.iterations
              << " iterations (" << rec.termination << "), record written to "
              << out.string() << "\n";
    return 0;
}

int cmd_anneal(const Options& opt) {
    if (opt.init != "default" && opt.init != "random")
        throw std::invalid_argument("--init must be default or random");
    const AppConfig cfg = effective_config(opt);
    const GeneratorSet gen = build_generators(cfg.spec);
    std::optional<ControlVector> f0;
    if (opt.init == "default") f0 = default_initial_guess(cfg.grid).to_controls();
    RunRecord rec = anneal_run(cfg.objective, gen, cfg.grid, f0, cfg.gate(), cfg.anneal);
    rec.config = config_snapshot(cfg);
    const fs::path out = fs::path(cfg.out_dir) / "run.json";
    write_run_record(out, rec);
    std::cout << "final value " << rec.final_value << " after " << rec.nfev
              << " evaluations (" << rec.termination << "), record written to "
              << out.string() << "\n";
    return 0;
}

int cmd_landscape(const Options& opt) {
    const AppConfig cfg = effective_config(opt);
    const LandscapeConfig lcfg = cfg.landscape(opt.jobs);
    const LandscapeResult res = run_landscape(lcfg);

    const fs::path out(cfg.out_dir);
    const std::string snapshot = config_snapshot(cfg);
    for (int i = 0; i < lcfg.L; ++i) {
        if (!res.summary.failures[i].empty()) continue;
        RunRecord rec = res.records[i];
        rec.config = snapshot;
        char name[32];
        std::snprintf(name, sizeof(name), "run_%d.json", i);
        write_run_record(out / "runs" / name, rec);
    }
    write_summary(out / "summary.json", res.summary);
    write_histogram_csv(out / "histogram.csv", res.summary.hist);
    std::cout << "landscape: " << lcfg.L << " runs, " << res.summary.failure_count
              << " failures, min " << res.summary.min_value << ", peaks "
              << res.summary.peak_count << ", written to " << out.string() << "\n";
    return std::min(res.summary.failure_count, 100);
}

int cmd_sweep(const Options& opt) {
    const AppConfig cfg = effective_config(opt);
    std::vector<double> epsilons = cfg.sweep_epsilons;
    if (epsilons.empty())
        for (int i = 0; i <= 10; ++i) epsilons.push_back(0.01 * i);
    const LandscapeConfig lcfg = cfg.landscape(opt.jobs);
    const std::vector<SweepRow> table = epsilon_sweep(lcfg, epsilons, cfg.sweep_restarts);
    const fs::path out = fs::path(cfg.out_dir) / "sweep.csv";
    write_sweep_csv(out, table);
    for (const auto& row : table)
        std::cout << "eps " << row.epsilon << " best " << row.best_value << " ("
                  << row.iterations << " iterations)\n";
    std::cout << "table written to " << out.string() << "\n";
    return 0;
}

int cmd_gradcheck(const Options& opt) {
    const AppConfig cfg = effective_config(opt);
    const ParamVector g = sample_initial(opt.seed_or(0), 0, cfg.grid.K);

    auto rel_error = [&](int system, GateKind gk, ObjectiveKind kind, int segments) {
        const GeneratorSet gen = build_generators(make_system(system, cfg.spec.epsilon));
        const GateTarget gate = make_gate(gk, cfg.lambda());
        GradOptions go = cfg.grape.grad;
        go.segments = segments;
        const Eigen::VectorXd ga = grad_objective(kind, gen, cfg.grid, g, gate, go);
        const Eigen::VectorXd gf =
            fd_gradient(kind, gen, cfg.grid, g, gate, go.fd_step);
        return (ga - gf).norm() / gf.norm();
    };

    nlohmann::ordered_json report;
    double worst = 0.0;
    if (opt.all) {
        nlohmann::ordered_json cases = nlohmann::ordered_json::array();
        for (int s = 1; s <= 3; ++s)
            for (GateKind gk : {GateKind::CNOT, GateKind::CPHASE})
                for (ObjectiveKind kind :
                     {ObjectiveKind::SD, ObjectiveKind::GRK_SD, ObjectiveKind::GRK_SP}) {
                    const double rel = rel_error(s, gk, kind, cfg.grape.grad.segments);
                    worst = std::max(worst, rel);
                    cases.push_back({{"system", s},
                                     {"gate", gate_name(gk)},
                                     {"objective", objective_name(kind)},
                                     {"rel_error", rel}});
                    std::cout << "system " << s << " " << gate_name(gk) << " "
                              << objective_name(kind) << ": rel error " << rel << "\n";
                }
        report["cases"] = cases;
    } else {
        const double rel =
            rel_error(cfg.system, cfg.gate_kind, cfg.objective, cfg.grape.grad.segments);
        worst = rel;
        report["cases"] = {{{"system", cfg.system},
                            {"gate", gate_name(cfg.gate_kind)},
                            {"objective", objective_name(cfg.objective)},
                            {"rel_error", rel}}};
        std::cout << "relative error " << rel << " (tol " << opt.tol << ")\n";
    }

    nlohmann::ordered_json quad = nlohmann::ordered_json::array();
    for (int s : {20, 40, 80, 200}) {
        const double rel = rel_error(cfg.system, cfg.gate_kind, cfg.objective, s);
        quad.push_back({{"segments", s}, {"rel_error", rel}});
    }
    report["quadrature"] = quad;
    report["tol"] = opt.tol;
    report["pass"] = worst <= opt.tol;

    if (!opt.out_dir.empty() || !cfg.out_dir.empty()) {
        const fs::path out = fs::path(cfg.out_dir) / "gradcheck.json";
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        std::ofstream f(out);
        f << report.dump(2) << "\n";
        std::cout << "report written to " << out.string() << "\n";
    }
    return worst <= opt.tol ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"piecewise-constant control toolkit for two-qubit gate generation"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_file, "JSON config file");
        sub->add_option("--seed", opt.seed, "random seed / master seed");
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--system", opt.system, "system id 1|2|3");
        sub->add_option("--gate", opt.gate, "cnot|cphase");
        sub->add_option("--objective", opt.objective, "sd|grk-sd|grk-sp");
        sub->add_option("--lambda-over-pi", opt.lambda_over_pi,
                        "phase gate angle in units of pi");
        sub->add_option("--eacc", opt.eacc, "gradient-norm stopping accuracy");
        sub->add_option("-T", opt.T, "final time");
        sub->add_option("-K", opt.K, "number of control intervals");
    };

    CLI::App* prop = app.add_subcommand("propagate", "evolve a state under a control file");
    add_common(prop);
    prop->add_option("--controls", opt.controls_file, "controls CSV (t,u,n1,n2)")
        ->required();
    prop->add_option("--state", opt.state, "initial state rho1|rho2|rho3");
    prop->add_flag("--oracle", opt.oracle, "cross-check against the ODE oracle");

    CLI::App* grape = app.add_subcommand("grape", "adaptive gradient descent run");
    add_common(grape);
    grape->add_option("--init", opt.init, "default|random initial guess");

    CLI::App* anneal = app.add_subcommand("anneal", "generalized simulated annealing run");
    add_common(anneal);
    anneal->add_option("--init", opt.init, "default|random initial guess");

    CLI::App* land = app.add_subcommand("landscape", "multistart landscape statistics");
    add_common(land);
    land->add_option("--runs", opt.runs, "number of multistart runs");

    CLI::App* sweep = app.add_subcommand("sweep-eps", "objective vs decoherence rate");
    add_common(sweep);

    CLI::App* gc = app.add_subcommand("gradcheck", "analytic vs finite-difference gradient");
    add_common(gc);
    gc->add_option("--tol", opt.tol, "relative error threshold");
    gc->add_option("--segments", opt.segments, "quadrature segments");
    gc->add_flag("--all", opt.all, "check every system/gate/objective combination");

    CLI11_PARSE(app, argc, argv);

    try {
        if (prop->parsed()) return cmd_propagate(opt);
        if (grape->parsed()) return cmd_grape(opt);
        if (anneal->parsed()) return cmd_anneal(opt);
        if (land->parsed()) return cmd_landscape(opt);
        if (sweep->parsed()) return cmd_sweep(opt);
        if (gc->parsed()) return cmd_gradcheck(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
