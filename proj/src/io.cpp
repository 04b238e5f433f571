#include "qcl/io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace qcl {

using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_keys(const json& j, const std::string& path,
                  std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw std::invalid_argument("config: " + path + " must be an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw std::invalid_argument("config: unknown key " + path + item.key());
    }
}

template <typename T>
void fetch(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_std(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                             static_cast<Eigen::Index>(v.size()));
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_field(const std::string& s, int line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("controls csv line " + std::to_string(line_no) +
                                    ": bad " + what + " value '" + s + "'");
    }
}

std::ofstream open_out(const std::filesystem::path& file) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    out.precision(17);
    return out;
}

}  // namespace

double AppConfig::lambda() const { return lambda_over_pi * kPi; }

GateTarget AppConfig::gate() const { return make_gate(gate_kind, lambda()); }

LandscapeConfig AppConfig::landscape(int jobs) const {
    LandscapeConfig cfg;
    cfg.system = static_cast<int>(spec.kind);
    cfg.gate_kind = gate_kind;
    cfg.lambda = lambda();
    cfg.objective = objective;
    cfg.grid = grid;
    cfg.epsilon = spec.epsilon;
    cfg.L = landscape_runs;
    cfg.master_seed = master_seed;
    cfg.grape = grape;
    cfg.init = init;
    cfg.jobs = jobs;
    cfg.gap_threshold = gap_threshold;
    cfg.histogram_bins = histogram_bins;
    return cfg;
}

void AppConfig::validate() const {
    if (system < 1 || system > 3)
        throw std::invalid_argument("config: system must be 1, 2 or 3");
    spec.validate();
    grid.validate();
    grape.validate();
    anneal.validate();
    if (gate_kind == GateKind::CPHASE && lambda_over_pi <= 0)
        throw std::invalid_argument("config: lambda_over_pi must be > 0 for cphase");
    if (landscape_runs < 1)
        throw std::invalid_argument("config: landscape runs must be >= 1");
    if (gap_threshold <= 0)
        throw std::invalid_argument("config: gap_threshold must be > 0");
    if (histogram_bins < 0)
        throw std::invalid_argument("config: histogram_bins must be >= 0");
    if (sweep_restarts < 1)
        throw std::invalid_argument("config: sweep restarts must be >= 1");
    for (double e : sweep_epsilons)
        if (e < 0) throw std::invalid_argument("config: sweep epsilon must be >= 0");
}

ObjectiveKind objective_from_name(const std::string& name) {
    if (name == "sd") return ObjectiveKind::SD;
    if (name == "grk-sd") return ObjectiveKind::GRK_SD;
    if (name == "grk-sp") return ObjectiveKind::GRK_SP;
    throw std::invalid_argument("config: unknown objective '" + name + "'");
}

std::string objective_name(ObjectiveKind kind) {
    switch (kind) {
        case ObjectiveKind::SD: return "sd";
        case ObjectiveKind::GRK_SD: return "grk-sd";
        case ObjectiveKind::GRK_SP: return "grk-sp";
    }
    throw std::logic_error("objective_name: bad kind");
}

GateKind gate_from_name(const std::string& name) {
    if (name == "cnot") return GateKind::CNOT;
    if (name == "cphase") return GateKind::CPHASE;
    throw std::invalid_argument("config: unknown gate '" + name + "'");
}

std::string gate_name(GateKind kind) {
    return kind == GateKind::CNOT ? "cnot" : "cphase";
}

InitScheme init_from_name(const std::string& name) {
    if (name == "uniform_unit_cube") return InitScheme::UniformUnitCube;
    if (name == "default_guess") return InitScheme::DefaultGuess;
    if (name == "file") return InitScheme::File;
    throw std::invalid_argument("config: unknown init scheme '" + name + "'");
}

std::string init_name(InitScheme scheme) {
    switch (scheme) {
        case InitScheme::UniformUnitCube: return "uniform_unit_cube";
        case InitScheme::DefaultGuess: return "default_guess";
        case InitScheme::File: return "file";
    }
    throw std::logic_error("init_name: bad scheme");
}

AppConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    require_keys(j, "", {"system", "physics", "gate", "lambda_over_pi", "objective",
                         "grid", "grape", "anneal", "landscape", "sweep", "out_dir"});

    AppConfig cfg;
    fetch(j, "system", cfg.system);
    if (cfg.system < 1 || cfg.system > 3)
        throw std::invalid_argument("config: system must be 1, 2 or 3");
    cfg.spec = make_system(cfg.system);

    if (j.contains("physics")) {
        const json& p = j.at("physics");
        require_keys(p, "physics.",
                     {"omega1", "omega2", "alpha", "lambda1", "lambda2", "cap_omega1",
                      "cap_omega2", "epsilon"});
        fetch(p, "omega1", cfg.spec.omega1);
        fetch(p, "omega2", cfg.spec.omega2);
        fetch(p, "alpha", cfg.spec.alpha);
        fetch(p, "lambda1", cfg.spec.lambda1);
        fetch(p, "lambda2", cfg.spec.lambda2);
        fetch(p, "cap_omega1", cfg.spec.cap_omega1);
        fetch(p, "cap_omega2", cfg.spec.cap_omega2);
        fetch(p, "epsilon", cfg.spec.epsilon);
    }

    if (j.contains("gate")) cfg.gate_kind = gate_from_name(j.at("gate").get<std::string>());
    fetch(j, "lambda_over_pi", cfg.lambda_over_pi);
    if (j.contains("objective"))
        cfg.objective = objective_from_name(j.at("objective").get<std::string>());

    if (j.contains("grid")) {
        const json& g = j.at("grid");
        require_keys(g, "grid.", {"T", "K"});
        fetch(g, "T", cfg.grid.T);
        fetch(g, "K", cfg.grid.K);
    }

    if (j.contains("grape")) {
        const json& g = j.at("grape");
        require_keys(g, "grape.",
                     {"h0", "a", "beta_step", "eps_acc", "max_iter", "max_backtracks",
                      "segments", "fd_step"});
        fetch(g, "h0", cfg.grape.h0);
        fetch(g, "a", cfg.grape.a);
        fetch(g, "beta_step", cfg.grape.beta_step);
        fetch(g, "eps_acc", cfg.grape.eps_acc);
        fetch(g, "max_iter", cfg.grape.max_iter);
        fetch(g, "max_backtracks", cfg.grape.max_backtracks);
        fetch(g, "segments", cfg.grape.grad.segments);
        fetch(g, "fd_step", cfg.grape.grad.fd_step);
    }

    if (j.contains("anneal")) {
        const json& a = j.at("anneal");
        require_keys(a, "anneal.",
                     {"initial_temp", "maxiter", "maxfun", "qv", "qa",
                      "restart_temp_ratio", "u_max", "n_max", "polish_eps",
                      "polish_max_iter", "polish_interval"});
        fetch(a, "initial_temp", cfg.anneal.initial_temp);
        fetch(a, "maxiter", cfg.anneal.maxiter);
        fetch(a, "maxfun", cfg.anneal.maxfun);
        fetch(a, "qv", cfg.anneal.qv);
        fetch(a, "qa", cfg.anneal.qa);
        fetch(a, "restart_temp_ratio", cfg.anneal.restart_temp_ratio);
        fetch(a, "u_max", cfg.anneal.u_max);
        fetch(a, "n_max", cfg.anneal.n_max);
        fetch(a, "polish_eps", cfg.anneal.polish_eps);
        fetch(a, "polish_max_iter", cfg.anneal.polish_max_iter);
        fetch(a, "polish_interval", cfg.anneal.polish_interval);
        cfg.anneal.grad = cfg.grape.grad;
    } else {
        cfg.anneal.grad = cfg.grape.grad;
    }

    if (j.contains("landscape")) {
        const json& l = j.at("landscape");
        require_keys(l, "landscape.",
                     {"runs", "master_seed", "gap_threshold", "bins", "init"});
        fetch(l, "runs", cfg.landscape_runs);
        fetch(l, "master_seed", cfg.master_seed);
        fetch(l, "gap_threshold", cfg.gap_threshold);
        fetch(l, "bins", cfg.histogram_bins);
        if (l.contains("init")) cfg.init = init_from_name(l.at("init").get<std::string>());
    }

    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        require_keys(s, "sweep.", {"epsilons", "restarts"});
        fetch(s, "epsilons", cfg.sweep_epsilons);
        fetch(s, "restarts", cfg.sweep_restarts);
    }

    fetch(j, "out_dir", cfg.out_dir);
    cfg.validate();
    return cfg;
}

AppConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open config " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

std::string config_to_json_text(const AppConfig& cfg) {
    json j;
    j["system"] = cfg.system;
    j["physics"] = {{"omega1", cfg.spec.omega1},
                    {"omega2", cfg.spec.omega2},
                    {"alpha", cfg.spec.alpha},
                    {"lambda1", cfg.spec.lambda1},
                    {"lambda2", cfg.spec.lambda2},
                    {"cap_omega1", cfg.spec.cap_omega1},
                    {"cap_omega2", cfg.spec.cap_omega2},
                    {"epsilon", cfg.spec.epsilon}};
    j["gate"] = gate_name(cfg.gate_kind);
    j["lambda_over_pi"] = cfg.lambda_over_pi;
    j["objective"] = objective_name(cfg.objective);
    j["grid"] = {{"T", cfg.grid.T}, {"K", cfg.grid.K}};
    j["grape"] = {{"h0", cfg.grape.h0},
                  {"a", cfg.grape.a},
                  {"beta_step", cfg.grape.beta_step},
                  {"eps_acc", cfg.grape.eps_acc},
                  {"max_iter", cfg.grape.max_iter},
                  {"max_backtracks", cfg.grape.max_backtracks},
                  {"segments", cfg.grape.grad.segments},
                  {"fd_step", cfg.grape.grad.fd_step}};
    j["anneal"] = {{"initial_temp", cfg.anneal.initial_temp},
                   {"maxiter", cfg.anneal.maxiter},
                   {"maxfun", cfg.anneal.maxfun},
                   {"qv", cfg.anneal.qv},
                   {"qa", cfg.anneal.qa},
                   {"restart_temp_ratio", cfg.anneal.restart_temp_ratio},
                   {"u_max", cfg.anneal.u_max},
                   {"n_max", cfg.anneal.n_max},
                   {"polish_eps", cfg.anneal.polish_eps},
                   {"polish_max_iter", cfg.anneal.polish_max_iter},
                   {"polish_interval", cfg.anneal.polish_interval}};
    j["landscape"] = {{"runs", cfg.landscape_runs},
                      {"master_seed", cfg.master_seed},
                      {"gap_threshold", cfg.gap_threshold},
                      {"bins", cfg.histogram_bins},
                      {"init", init_name(cfg.init)}};
    j["sweep"] = {{"epsilons", cfg.sweep_epsilons}, {"restarts", cfg.sweep_restarts}};
    j["out_dir"] = cfg.out_dir;
    return j.dump(2) + "\n";
}

void write_controls_csv(const std::filesystem::path& file, const ControlGrid& grid,
                        const ControlVector& f) {
    grid.validate();
    if (f.size() != grid.K)
        throw std::invalid_argument("write_controls_csv: control length != K");
    auto out = open_out(file);
    out << "t,u,n1,n2\n";
    for (int k = 0; k < grid.K; ++k)
        out << grid.t_left(k) << ',' << f.u(k) << ',' << f.n1(k) << ',' << f.n2(k)
            << '\n';
}

ControlVector read_controls_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open controls " + file.string());
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line))
        throw std::invalid_argument("controls csv line 1: missing header");
    ++line_no;
    if (trim(line) != "t,u,n1,n2")
        throw std::invalid_argument("controls csv line 1: expected header t,u,n1,n2");

    std::vector<double> u, n1, n2;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 4)
            throw std::invalid_argument("controls csv line " + std::to_string(line_no) +
                                        ": expected 4 fields, got " +
                                        std::to_string(fields.size()));
        parse_field(fields[0], line_no, "t");
        u.push_back(parse_field(fields[1], line_no, "u"));
        n1.push_back(parse_field(fields[2], line_no, "n1"));
        n2.push_back(parse_field(fields[3], line_no, "n2"));
        if (n1.back() < 0 || n2.back() < 0)
            throw std::invalid_argument("controls csv line " + std::to_string(line_no) +
                                        ": incoherent control must be >= 0");
    }
    if (u.empty()) throw std::invalid_argument("controls csv: no data rows");
    ControlVector f;
    f.u = from_std(u);
    f.n1 = from_std(n1);
    f.n2 = from_std(n2);
    return f;
}

void write_trajectory_csv(const std::filesystem::path& file, const ControlGrid& grid,
                          const std::vector<Vec16>& states) {
    auto out = open_out(file);
    out << "t";
    for (int i = 1; i <= 16; ++i) out << ",x" << i;
    out << '\n';
    for (std::size_t k = 0; k < states.size(); ++k) {
        out << k * grid.dt();
        for (int i = 0; i < 16; ++i) out << ',' << states[k](i);
        out << '\n';
    }
}

namespace {

json record_to_json(const RunRecord& rec) {
    json j;
    if (!rec.config.empty()) {
        json parsed = json::parse(rec.config, nullptr, false);
        j["config"] = parsed.is_discarded() ? json(rec.config) : parsed;
    } else {
        j["config"] = json::object();
    }
    j["seed"] = rec.seed;
    j["iterations"] = rec.iterations;
    j["history"] = rec.history;
    j["final_value"] = rec.final_value;
    j["grad_norm"] = rec.grad_norm;
    j["final_sd"] = rec.final_sd;
    j["controls"] = {{"u", to_std(rec.f.u)},
                     {"n1", to_std(rec.f.n1)},
                     {"n2", to_std(rec.f.n2)}};
    j["g"] = {{"u", to_std(rec.g.u)},
              {"w1", to_std(rec.g.w1)},
              {"w2", to_std(rec.g.w2)}};
    j["termination"] = rec.termination;
    j["nfev"] = rec.nfev;
    return j;
}

}  // namespace

std::string run_record_to_json_text(const RunRecord& rec) {
    return record_to_json(rec).dump(2) + "\n";
}

void write_run_record(const std::filesystem::path& file, const RunRecord& rec) {
    auto out = open_out(file);
    out << run_record_to_json_text(rec);
}

RunRecord read_run_record(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open record " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(file.string() + ": " + e.what());
    }
    RunRecord rec;
    if (j.contains("config"))
        rec.config = j.at("config").is_string() ? j.at("config").get<std::string>()
                                                : j.at("config").dump();
    rec.seed = j.value("seed", std::uint64_t{0});
    rec.iterations = j.value("iterations", 0);
    if (j.contains("history")) j.at("history").get_to(rec.history);
    rec.final_value = j.value("final_value", 0.0);
    rec.grad_norm = j.value("grad_norm", 0.0);
    rec.final_sd = j.value("final_sd", 0.0);
    if (j.contains("controls")) {
        const json& c = j.at("controls");
        rec.f.u = from_std(c.at("u").get<std::vector<double>>());
        rec.f.n1 = from_std(c.at("n1").get<std::vector<double>>());
        rec.f.n2 = from_std(c.at("n2").get<std::vector<double>>());
    }
    if (j.contains("g")) {
        const json& g = j.at("g");
        rec.g.u = from_std(g.at("u").get<std::vector<double>>());
        rec.g.w1 = from_std(g.at("w1").get<std::vector<double>>());
        rec.g.w2 = from_std(g.at("w2").get<std::vector<double>>());
    }
    rec.termination = j.value("termination", std::string());
    rec.nfev = j.value("nfev", long{0});
    return rec;
}

std::string summary_to_json_text(const LandscapeSummary& summary) {
    json j;
    j["runs"] = summary.final_values.size();
    j["failures"] = summary.failure_count;
    json msgs = json::array();
    for (std::size_t i = 0; i < summary.failures.size(); ++i)
        if (!summary.failures[i].empty())
            msgs.push_back({{"run", i}, {"error", summary.failures[i]}});
    j["failure_messages"] = msgs;
    j["final_values"] = summary.final_values;
    j["min"] = summary.min_value;
    j["mean"] = summary.mean_value;
    j["std"] = summary.std_value;
    j["histogram"] = {{"edges", summary.hist.edges}, {"counts", summary.hist.counts}};
    json clusters = json::array();
    for (const auto& c : summary.clusters.clusters)
        clusters.push_back({{"size", c.members.size()},
                            {"members", c.members},
                            {"value_center", c.value_center},
                            {"value_lo", c.value_lo},
                            {"value_hi", c.value_hi},
                            {"within_spread", c.within_spread},
                            {"control_centroid", to_std(c.control_centroid)}});
    j["clusters"] = clusters;
    j["centroid_separation"] = summary.clusters.centroid_separation;
    j["peak_count"] = summary.peak_count;
    return j.dump(2) + "\n";
}

void write_summary(const std::filesystem::path& file, const LandscapeSummary& summary) {
    auto out = open_out(file);
    out << summary_to_json_text(summary);
}

void write_histogram_csv(const std::filesystem::path& file, const HistogramBins& hist) {
    auto out = open_out(file);
    out << "bin_left,bin_right,count\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b)
        out << hist.edges[b] << ',' << hist.edges[b + 1] << ',' << hist.counts[b]
            << '\n';
}

void write_sweep_csv(const std::filesystem::path& file,
                     const std::vector<SweepRow>& table) {
    auto out = open_out(file);
    out << "epsilon,best_value,iterations\n";
    for (const auto& row : table)
        out << row.epsilon << ',' << row.best_value << ',' << row.iterations << '\n';
}

}  // namespace qcl
