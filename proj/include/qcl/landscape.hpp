#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcl/model.hpp"
#include "qcl/optimize.hpp"

namespace qcl {

enum class InitScheme { UniformUnitCube, DefaultGuess, File };

struct LandscapeConfig {
    int system = 3;
    GateKind gate_kind = GateKind::CNOT;
    double lambda = 0.0;  // C-PHASE angle, ignored for C-NOT
    ObjectiveKind objective = ObjectiveKind::GRK_SD;
    ControlGrid grid;
    double epsilon = 0.1;
    int L = 100;
    std::uint64_t master_seed = 0;
    GrapeParams grape;
    InitScheme init = InitScheme::UniformUnitCube;
    std::optional<ParamVector> init_vector;  // required for InitScheme::File
    int jobs = 1;
    double gap_threshold = 0.15;
    int histogram_bins = 0;  // 0 selects Freedman-Diaconis

    void validate() const;
};

struct HistogramBins {
    std::vector<double> edges;  // counts.size() + 1 when non-empty
    std::vector<long> counts;
};

// bins > 0 fixes the bin count; bins == 0 selects Freedman-Diaconis width.
struct Binning {
    int bins = 0;
};

struct Cluster {
    std::vector<int> members;
    double value_center = 0.0;
    double value_lo = 0.0;
    double value_hi = 0.0;
    Eigen::VectorXd control_centroid;
    double within_spread = 0.0;  // mean distance of member controls to centroid
};

struct ClusterSummary {
    std::vector<Cluster> clusters;
    double centroid_separation = 0.0;  // min pairwise centroid distance, 0 for one cluster
};

struct LandscapeSummary {
    std::vector<double> final_values;   // NaN where the run failed
    std::vector<std::string> failures;  // empty string where the run succeeded
    int failure_count = 0;
    HistogramBins hist;
    double min_value = 0.0;
    double mean_value = 0.0;
    double std_value = 0.0;
    ClusterSummary clusters;
    int peak_count = 0;
};

struct LandscapeResult {
    LandscapeSummary summary;
    std::vector<RunRecord> records;  // index-aligned with summary.final_values
};

struct SweepRow {
    double epsilon = 0.0;
    double best_value = 0.0;
    int iterations = 0;
};

// 3K independent U[0,1] draws from the stream keyed by (master_seed, run_index),
// reproducible independent of execution order.
ParamVector sample_initial(std::uint64_t master_seed, std::uint64_t run_index, int K);

LandscapeResult run_landscape(const LandscapeConfig& cfg);

HistogramBins histogram(const std::vector<double>& values, const Binning& binning);

ClusterSummary detect_clusters(const std::vector<RunRecord>& records,
                               double gap_threshold = 0.15);

// One best-of-`restarts` inGRAPE run per epsilon; restart 0 is the fixed
// cos/gaussian guess, the rest are unit-cube draws keyed by (master_seed, index).
std::vector<SweepRow> epsilon_sweep(const LandscapeConfig& cfg,
                                    const std::vector<double>& epsilons,
                                    int restarts = 3);

}  // namespace qcl
