#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qcl/landscape.hpp"
#include "qcl/model.hpp"
#include "qcl/optimize.hpp"
#include "qcl/propagator.hpp"

namespace qcl {

// Full experiment description with defaults matching the reference parameter
// set (omega1=1, omega2=1.1, Lambda=Omega=0.5, alpha=0.2, T=20, K=100, eps=0.1).
struct AppConfig {
    int system = 1;
    SystemSpec spec;  // epsilon and coupling constants
    GateKind gate_kind = GateKind::CNOT;
    double lambda_over_pi = 1.0;
    ObjectiveKind objective = ObjectiveKind::GRK_SD;
    ControlGrid grid;
    GrapeParams grape;
    AnnealParams anneal;

    int landscape_runs = 100;
    std::uint64_t master_seed = 0;
    double gap_threshold = 0.15;
    int histogram_bins = 0;
    InitScheme init = InitScheme::UniformUnitCube;

    std::vector<double> sweep_epsilons;
    int sweep_restarts = 3;

    std::string out_dir = "out";

    double lambda() const;
    GateTarget gate() const;
    LandscapeConfig landscape(int jobs) const;
    void validate() const;
};

// Strict JSON round-trip: unknown keys are rejected with their path.
AppConfig config_from_json_text(const std::string& text);
AppConfig load_config(const std::filesystem::path& file);
std::string config_to_json_text(const AppConfig& cfg);

ObjectiveKind objective_from_name(const std::string& name);
std::string objective_name(ObjectiveKind kind);
GateKind gate_from_name(const std::string& name);
std::string gate_name(GateKind kind);
InitScheme init_from_name(const std::string& name);
std::string init_name(InitScheme scheme);

// Controls CSV: header "t,u,n1,n2", one row per interval, t = left endpoint.
void write_controls_csv(const std::filesystem::path& file, const ControlGrid& grid,
                        const ControlVector& f);
// Malformed rows raise with a line number; negative n is rejected.
ControlVector read_controls_csv(const std::filesystem::path& file);

// State trajectory CSV: header "t,x1,...,x16", one row per checkpoint.
void write_trajectory_csv(const std::filesystem::path& file, const ControlGrid& grid,
                          const std::vector<Vec16>& states);

std::string run_record_to_json_text(const RunRecord& rec);
void write_run_record(const std::filesystem::path& file, const RunRecord& rec);
RunRecord read_run_record(const std::filesystem::path& file);

std::string summary_to_json_text(const LandscapeSummary& summary);
void write_summary(const std::filesystem::path& file, const LandscapeSummary& summary);
void write_histogram_csv(const std::filesystem::path& file, const HistogramBins& hist);
void write_sweep_csv(const std::filesystem::path& file,
                     const std::vector<SweepRow>& table);

}  // namespace qcl
