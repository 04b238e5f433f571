#include "qcl/landscape.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "qcl/rng.hpp"

namespace qcl {

void LandscapeConfig::validate() const {
    if (system < 1 || system > 3)
        throw std::invalid_argument("LandscapeConfig: system must be 1, 2 or 3");
    if (L < 1) throw std::invalid_argument("LandscapeConfig: L must be >= 1");
    if (jobs < 1) throw std::invalid_argument("LandscapeConfig: jobs must be >= 1");
    if (init == InitScheme::File && !init_vector)
        throw std::invalid_argument("LandscapeConfig: init=file requires an init vector");
    if (init == InitScheme::File && init_vector->size() != grid.K)
        throw std::invalid_argument("LandscapeConfig: init vector length != K");
    if (gap_threshold <= 0)
        throw std::invalid_argument("LandscapeConfig: gap threshold must be > 0");
    if (histogram_bins < 0)
        throw std::invalid_argument("LandscapeConfig: negative histogram bin count");
    grid.validate();
    grape.validate();
}

ParamVector sample_initial(std::uint64_t master_seed, std::uint64_t run_index, int K) {
    if (K < 1) throw std::invalid_argument("sample_initial: K must be >= 1");
    RngStream rng(master_seed, run_index);
    ParamVector g;
    g.u.resize(K);
    g.w1.resize(K);
    g.w2.resize(K);
    for (int k = 0; k < K; ++k) g.u(k) = rng.uniform01();
    for (int k = 0; k < K; ++k) g.w1(k) = rng.uniform01();
    for (int k = 0; k < K; ++k) g.w2(k) = rng.uniform01();
    return g;
}

namespace {

ParamVector initial_for(const LandscapeConfig& cfg, int run) {
    switch (cfg.init) {
        case InitScheme::UniformUnitCube:
            return sample_initial(cfg.master_seed, static_cast<std::uint64_t>(run),
                                  cfg.grid.K);
        case InitScheme::DefaultGuess:
            return default_initial_guess(cfg.grid);
        case InitScheme::File:
            return *cfg.init_vector;
    }
    throw std::logic_error("initial_for: unknown init scheme");
}

}  // namespace

LandscapeResult run_landscape(const LandscapeConfig& cfg) {
    cfg.validate();
    const GeneratorSet gen = build_generators(make_system(cfg.system, cfg.epsilon));
    const GateTarget gate = make_gate(cfg.gate_kind, cfg.lambda);

    LandscapeResult res;
    res.records.resize(cfg.L);
    res.summary.final_values.assign(cfg.L, std::numeric_limits<double>::quiet_NaN());
    res.summary.failures.assign(cfg.L, std::string());

    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= cfg.L) return;
            try {
                RunRecord rec = ingrape_run(cfg.objective, gen, cfg.grid,
                                            initial_for(cfg, i), gate, cfg.grape);
                rec.seed = static_cast<std::uint64_t>(i);
                res.records[i] = std::move(rec);
                res.summary.final_values[i] = res.records[i].final_value;
            } catch (const std::exception& e) {
                res.summary.failures[i] = e.what();
            }
        }
    };

    const int workers = std::min(cfg.jobs, cfg.L);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<double> ok_values;
    std::vector<RunRecord> ok_records;
    for (int i = 0; i < cfg.L; ++i) {
        if (res.summary.failures[i].empty()) {
            ok_values.push_back(res.summary.final_values[i]);
            ok_records.push_back(res.records[i]);
        } else {
            ++res.summary.failure_count;
        }
    }

    if (!ok_values.empty()) {
        res.summary.min_value = *std::min_element(ok_values.begin(), ok_values.end());
        const double n = static_cast<double>(ok_values.size());
        res.summary.mean_value =
            std::accumulate(ok_values.begin(), ok_values.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : ok_values) {
            const double d = v - res.summary.mean_value;
            ss += d * d;
        }
        res.summary.std_value = std::sqrt(ss / n);
        res.summary.hist = histogram(ok_values, Binning{cfg.histogram_bins});
        res.summary.clusters = detect_clusters(ok_records, cfg.gap_threshold);
        res.summary.peak_count = static_cast<int>(res.summary.clusters.clusters.size());
    } else {
        res.summary.min_value = res.summary.mean_value = res.summary.std_value =
            std::numeric_limits<double>::quiet_NaN();
    }
    return res;
}

HistogramBins histogram(const std::vector<double>& values, const Binning& binning) {
    HistogramBins h;
    if (values.empty()) return h;
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("histogram: non-finite value");
    if (binning.bins < 0) throw std::invalid_argument("histogram: negative bin count");

    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }

    int nbins = binning.bins;
    if (nbins == 0) {
        std::vector<double> sorted(values);
        std::sort(sorted.begin(), sorted.end());
        const auto quantile = [&](double q) {
            const double pos = q * (sorted.size() - 1);
            const std::size_t i = static_cast<std::size_t>(pos);
            const double frac = pos - i;
            return i + 1 < sorted.size() ? sorted[i] * (1 - frac) + sorted[i + 1] * frac
                                         : sorted[i];
        };
        const double iqr = quantile(0.75) - quantile(0.25);
        const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
        nbins = width > 0 ? static_cast<int>(std::ceil((hi - lo) / width)) : 1;
        nbins = std::clamp(nbins, 1, 1000);
    }

    h.edges.resize(nbins + 1);
    for (int b = 0; b <= nbins; ++b)
        h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / nbins;
    h.counts.assign(nbins, 0);
    for (double v : values) {
        int b = static_cast<int>((v - lo) / (hi - lo) * nbins);
        b = std::clamp(b, 0, nbins - 1);
        ++h.counts[b];
    }
    return h;
}

ClusterSummary detect_clusters(const std::vector<RunRecord>& records,
                               double gap_threshold) {
    if (records.empty()) throw std::invalid_argument("detect_clusters: no records");
    if (gap_threshold <= 0)
        throw std::invalid_argument("detect_clusters: gap threshold must be > 0");

    const int n = static_cast<int>(records.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return records[a].final_value < records[b].final_value;
    });
    const double range = records[order.back()].final_value -
                         records[order.front()].final_value;

    std::vector<std::vector<int>> groups;
    groups.emplace_back();
    groups.back().push_back(order[0]);
    for (int i = 1; i < n; ++i) {
        const double gap = records[order[i]].final_value -
                           records[order[i - 1]].final_value;
        if (range > 0 && gap > gap_threshold * range) groups.emplace_back();
        groups.back().push_back(order[i]);
    }

    ClusterSummary cs;
    for (const auto& members : groups) {
        Cluster c;
        c.members = members;
        c.value_lo = records[members.front()].final_value;
        c.value_hi = records[members.back()].final_value;
        double sum = 0.0;
        Eigen::VectorXd centroid =
            Eigen::VectorXd::Zero(records[members.front()].g.flat().size());
        for (int idx : members) {
            sum += records[idx].final_value;
            centroid += records[idx].g.flat();
        }
        c.value_center = sum / members.size();
        centroid /= static_cast<double>(members.size());
        c.control_centroid = centroid;
        double spread = 0.0;
        for (int idx : members)
            spread += (records[idx].g.flat() - centroid).norm();
        c.within_spread = spread / members.size();
        cs.clusters.push_back(std::move(c));
    }

    if (cs.clusters.size() > 1) {
        double min_sep = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < cs.clusters.size(); ++a)
            for (std::size_t b = a + 1; b < cs.clusters.size(); ++b)
                min_sep = std::min(min_sep, (cs.clusters[a].control_centroid -
                                             cs.clusters[b].control_centroid)
                                                .norm());
        cs.centroid_separation = min_sep;
    }
    return cs;
}

std::vector<SweepRow> epsilon_sweep(const LandscapeConfig& cfg,
                                    const std::vector<double>& epsilons,
                                    int restarts) {
    if (restarts < 1) throw std::invalid_argument("epsilon_sweep: restarts must be >= 1");
    for (double e : epsilons)
        if (e < 0) throw std::invalid_argument("epsilon_sweep: epsilon must be >= 0");

    const GateTarget gate = make_gate(cfg.gate_kind, cfg.lambda);
    std::vector<SweepRow> table;
    table.reserve(epsilons.size());
    std::uint64_t draw = 0;
    for (double eps : epsilons) {
        const GeneratorSet gen = build_generators(make_system(cfg.system, eps));
        SweepRow row;
        row.epsilon = eps;
        row.best_value = std::numeric_limits<double>::infinity();
        for (int r = 0; r < restarts; ++r) {
            const ParamVector g0 =
                r == 0 ? default_initial_guess(cfg.grid)
                       : sample_initial(cfg.master_seed, draw + r, cfg.grid.K);
            const RunRecord rec =
                ingrape_run(cfg.objective, gen, cfg.grid, g0, gate, cfg.grape);
            if (rec.final_value < row.best_value) {
                row.best_value = rec.final_value;
                row.iterations = rec.iterations;
            }
        }
        draw += restarts;
        table.push_back(row);
    }
    return table;
}

}  // namespace qcl
