#include "qcl/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "qcl/rng.hpp"

namespace qcl {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double sd_at(const GeneratorSet& gen, const ControlGrid& grid, const ControlVector& f,
             const GateTarget& gate) {
    return evaluate(ObjectiveKind::SD, gen, grid, f, gate);
}

// Stopping norm: l2 of the discrete gradient rescaled by 1/sqrt(dt) so the
// threshold approximates the L2([0,T]) norm of the functional gradient and a
// given eps_acc means the same accuracy on every grid.
double stop_norm(const Eigen::VectorXd& grad, const ControlGrid& grid) {
    return grad.norm() / std::sqrt(grid.dt());
}

}  // namespace

void GrapeParams::validate() const {
    if (a < 1.0) throw std::invalid_argument("GrapeParams: growth factor must be >= 1");
    if (beta_step <= 0 || beta_step >= 1)
        throw std::invalid_argument("GrapeParams: shrink factor must be in (0,1)");
    if (eps_acc <= 0) throw std::invalid_argument("GrapeParams: eps_acc must be > 0");
    if (h0 <= 0) throw std::invalid_argument("GrapeParams: h0 must be > 0");
    if (max_iter < 0 || max_backtracks < 1)
        throw std::invalid_argument("GrapeParams: invalid iteration budgets");
    grad.validate();
}

void AnnealParams::validate() const {
    if (initial_temp <= 0) throw std::invalid_argument("AnnealParams: initial_temp must be > 0");
    if (u_max <= 0 || n_max <= 0)
        throw std::invalid_argument("AnnealParams: bounds must be positive");
    if (maxfun < 1) throw std::invalid_argument("AnnealParams: maxfun must be >= 1");
    if (qv <= 1.0 || qv >= 3.0)
        throw std::invalid_argument("AnnealParams: visiting parameter must be in (1,3)");
    if (qa >= 1.0) throw std::invalid_argument("AnnealParams: acceptance parameter must be < 1");
    if (restart_temp_ratio <= 0 || restart_temp_ratio >= 1)
        throw std::invalid_argument("AnnealParams: restart_temp_ratio must be in (0,1)");
    grad.validate();
}

ParamVector default_initial_guess(const ControlGrid& grid) {
    grid.validate();
    ParamVector g;
    g.u.resize(grid.K);
    g.w1.resize(grid.K);
    g.w2.resize(grid.K);
    for (int k = 0; k < grid.K; ++k) {
        const double t = grid.t_right(k);
        g.u(k) = std::cos(0.3 * t);
        const double arg = t / grid.T - 0.5;
        g.w1(k) = g.w2(k) = std::exp(-5.0 * arg * arg);
    }
    return g;
}

RunRecord ingrape_run(ObjectiveKind kind, const GeneratorSet& gen,
                      const ControlGrid& grid, const ParamVector& g0,
                      const GateTarget& gate, const GrapeParams& params) {
    params.validate();
    const auto t0 = Clock::now();
    const int K = grid.K;
    if (g0.size() != K)
        throw std::invalid_argument("ingrape_run: initial guess length != K");
    if (!g0.flat().allFinite())
        throw std::invalid_argument("ingrape_run: non-finite initial guess");

    RunRecord rec;
    Eigen::VectorXd g = g0.flat();
    ObjectiveEval cur = eval_with_gradient(kind, gen, grid, g0, gate, params.grad);
    rec.nfev += 2;
    if (!std::isfinite(cur.value) || !cur.grad.allFinite())
        throw std::runtime_error("ingrape_run: non-finite objective or gradient at start");
    rec.history.push_back(cur.value);

    double h = params.h0;
    rec.termination = "max_iter";
    while (rec.iterations < params.max_iter) {
        const double gn = stop_norm(cur.grad, grid);
        if (gn < params.eps_acc) {
            rec.termination = "grad_tol";
            break;
        }
        bool accepted = false;
        double cand_val = 0.0;
        Eigen::VectorXd cand;
        for (int b = 0; b < params.max_backtracks; ++b) {
            cand = g - h * cur.grad;
            cand_val = evaluate_params(kind, gen, grid, ParamVector::from_flat(cand, K),
                                       gate);
            ++rec.nfev;
            if (!std::isfinite(cand_val))
                throw std::runtime_error("ingrape_run: non-finite objective");
            if (cand_val < cur.value) {
                accepted = true;
                break;
            }
            h *= params.beta_step;
        }
        if (!accepted) {
            rec.termination = "backtrack_floor";
            break;
        }
        g = cand;
        h *= params.a;
        cur = eval_with_gradient(kind, gen, grid, ParamVector::from_flat(g, K), gate,
                                 params.grad);
        rec.nfev += 2;
        if (!std::isfinite(cur.value) || !cur.grad.allFinite())
            throw std::runtime_error("ingrape_run: non-finite objective or gradient");
        rec.history.push_back(cur.value);
        ++rec.iterations;
    }

    rec.final_value = cur.value;
    rec.grad_norm = stop_norm(cur.grad, grid);
    rec.g = ParamVector::from_flat(g, K);
    rec.f = rec.g.to_controls();
    rec.final_sd = kind == ObjectiveKind::SD ? cur.value : sd_at(gen, grid, rec.f, gate);
    rec.wall_ms = elapsed_ms(t0);
    return rec;
}

namespace {

struct Box {
    Eigen::VectorXd lo, hi;
};

Box anneal_box(int K, const AnnealParams& p) {
    Box b;
    b.lo.resize(3 * K);
    b.hi.resize(3 * K);
    b.lo.segment(0, K).setConstant(-p.u_max);
    b.hi.segment(0, K).setConstant(p.u_max);
    b.lo.segment(K, 2 * K).setConstant(0.0);
    b.hi.segment(K, 2 * K).setConstant(p.n_max);
    return b;
}

ControlVector to_controls(const Eigen::VectorXd& x, int K) {
    ControlVector f;
    f.u = x.segment(0, K);
    f.n1 = x.segment(K, K);
    f.n2 = x.segment(2 * K, K);
    return f;
}

// Tsallis visiting displacement at the given temperature.
double visiting_step(RngStream& rng, double temperature, double qv) {
    constexpr double kTailLimit = 1e8;
    const double factor1 = std::exp(std::log(temperature) / (qv - 1.0));
    const double factor2 = std::exp((4.0 - qv) * std::log(qv - 1.0));
    const double factor3 = std::exp((2.0 - qv) * std::log(2.0) / (qv - 1.0));
    const double factor4 = std::sqrt(M_PI) * factor1 * factor2 / (factor3 * (3.0 - qv));
    const double factor5 = 1.0 / (qv - 1.0) - 0.5;
    const double d1 = 2.0 - factor5;
    const double factor6 =
        M_PI * (1.0 - factor5) / std::sin(M_PI * (1.0 - factor5)) / std::exp(std::lgamma(d1));
    const double sigmax =
        std::exp(-(qv - 1.0) * std::log(factor6 / factor4) / (3.0 - qv));
    const double x = sigmax * rng.normal();
    const double y = rng.normal();
    const double den = std::exp((qv - 1.0) * std::log(std::abs(y)) / (3.0 - qv));
    double visit = x / den;
    if (visit > kTailLimit) visit = kTailLimit * rng.uniform01();
    if (visit < -kTailLimit) visit = -kTailLimit * rng.uniform01();
    return visit;
}

double wrap_into(double v, double lo, double hi) {
    const double range = hi - lo;
    double a = std::fmod(v - lo, range);
    if (a < 0) a += range;
    double out = lo + a;
    if (out - lo < 1e-10) out += 1e-10;
    return out;
}

// Projected gradient descent in g-space over the equivalent box
// |u| <= u_max, |w| <= sqrt(n_max); returns function-evaluation equivalents.
long polish(ObjectiveKind kind, const GeneratorSet& gen, const ControlGrid& grid,
            const GateTarget& gate, const AnnealParams& p, Eigen::VectorXd& x_best,
            double& e_best, long budget) {
    const int K = grid.K;
    Eigen::VectorXd g(3 * K);
    g.segment(0, K) = x_best.segment(0, K);
    g.segment(K, 2 * K) = x_best.segment(K, 2 * K).cwiseSqrt();
    Eigen::VectorXd lo(3 * K), hi(3 * K);
    lo.segment(0, K).setConstant(-p.u_max);
    hi.segment(0, K).setConstant(p.u_max);
    const double wmax = std::sqrt(p.n_max);
    lo.segment(K, 2 * K).setConstant(-wmax);
    hi.segment(K, 2 * K).setConstant(wmax);

    long used = 0;
    if (budget < 2) return used;
    ObjectiveEval cur =
        eval_with_gradient(kind, gen, grid, ParamVector::from_flat(g, K), gate, p.grad);
    used += 2;
    double h = 1.0;
    for (int it = 0; it < p.polish_max_iter && used < budget; ++it) {
        if (cur.grad.norm() / std::sqrt(grid.dt()) < p.polish_eps) break;
        bool accepted = false;
        for (int b = 0; b < 40 && used + 1 <= budget; ++b) {
            Eigen::VectorXd cand =
                (g - h * cur.grad).cwiseMax(lo).cwiseMin(hi);
            const double v =
                evaluate_params(kind, gen, grid, ParamVector::from_flat(cand, K), gate);
            ++used;
            if (v < cur.value) {
                g = cand;
                cur.value = v;
                accepted = true;
                break;
            }
            h *= 0.5;
        }
        if (!accepted) break;
        h *= 1.1;
        if (used + 2 > budget) break;
        cur = eval_with_gradient(kind, gen, grid, ParamVector::from_flat(g, K), gate,
                                 p.grad);
        used += 2;
    }
    if (cur.value < e_best) {
        e_best = cur.value;
        x_best.segment(0, K) = g.segment(0, K);
        x_best.segment(K, 2 * K) =
            g.segment(K, 2 * K).cwiseProduct(g.segment(K, 2 * K));
    }
    return used;
}

}  // namespace

RunRecord anneal_run(ObjectiveKind kind, const GeneratorSet& gen,
                     const ControlGrid& grid, const std::optional<ControlVector>& f0,
                     const GateTarget& gate, const AnnealParams& params) {
    params.validate();
    grid.validate();
    const auto t0 = Clock::now();
    const int K = grid.K;
    const int dim = 3 * K;
    const Box box = anneal_box(K, params);
    RngStream rng(params.seed, 0);

    auto random_point = [&] {
        Eigen::VectorXd x(dim);
        for (int i = 0; i < dim; ++i) x(i) = rng.uniform(box.lo(i), box.hi(i));
        return x;
    };

    Eigen::VectorXd x;
    if (f0) {
        f0->validate();
        if (f0->size() != K)
            throw std::invalid_argument("anneal_run: initial control length != K");
        x.resize(dim);
        x.segment(0, K) = f0->u;
        x.segment(K, K) = f0->n1;
        x.segment(2 * K, K) = f0->n2;
        x = x.cwiseMax(box.lo).cwiseMin(box.hi);
    } else {
        x = random_point();
    }

    RunRecord rec;
    rec.seed = params.seed;
    double e_cur = evaluate(kind, gen, grid, to_controls(x, K), gate);
    rec.nfev = 1;
    if (!std::isfinite(e_cur))
        throw std::runtime_error("anneal_run: non-finite objective at initial point");
    Eigen::VectorXd x_best = x;
    double e_best = e_cur;
    rec.history.push_back(e_best);

    const double t1 = std::exp((params.qv - 1.0) * std::log(2.0)) - 1.0;
    const double restart_temp = params.initial_temp * params.restart_temp_ratio;
    int since_improve = 0;
    rec.termination = "maxiter";
    bool out_of_budget = rec.nfev >= params.maxfun;

    for (int i = 0; i < params.maxiter && !out_of_budget; ++i) {
        const double temperature =
            params.initial_temp * t1 / (std::pow(i + 2.0, params.qv - 1.0) - 1.0);
        if (temperature < restart_temp) {
            if (rec.nfev + 1 > params.maxfun) {
                out_of_budget = true;
                break;
            }
            x = random_point();
            e_cur = evaluate(kind, gen, grid, to_controls(x, K), gate);
            ++rec.nfev;
            ++rec.iterations;
            if (rec.nfev >= params.maxfun) {
                out_of_budget = true;
                break;
            }
            continue;
        }
        bool improved = false;
        for (int j = 0; j < 2 * dim; ++j) {
            if (rec.nfev + 1 > params.maxfun) {
                out_of_budget = true;
                break;
            }
            Eigen::VectorXd cand = x;
            if (j < dim) {
                for (int c = 0; c < dim; ++c) {
                    const double v = x(c) + visiting_step(rng, temperature, params.qv);
                    cand(c) = wrap_into(v, box.lo(c), box.hi(c));
                }
            } else {
                const int c = j - dim;
                const double v = x(c) + visiting_step(rng, temperature, params.qv);
                cand(c) = wrap_into(v, box.lo(c), box.hi(c));
            }
            const double e_new = evaluate(kind, gen, grid, to_controls(cand, K), gate);
            ++rec.nfev;
            if (std::isfinite(e_new)) {
                bool accept = e_new < e_cur;
                if (!accept) {
                    const double t_adapt = temperature / (i + 1.0);
                    const double val =
                        1.0 - (1.0 - params.qa) * (e_new - e_cur) / t_adapt;
                    if (val > 0) {
                        const double p = std::exp(std::log(val) / (1.0 - params.qa));
                        accept = rng.uniform01() < p;
                    }
                }
                if (accept) {
                    x = cand;
                    e_cur = e_new;
                    if (e_cur < e_best) {
                        e_best = e_cur;
                        x_best = x;
                        improved = true;
                        rec.history.push_back(e_best);
                    }
                }
            }
            if (rec.nfev >= params.maxfun) {
                out_of_budget = true;
                break;
            }
        }
        ++rec.iterations;
        if (!out_of_budget) {
            if (improved) {
                since_improve = 0;
                rec.nfev += polish(kind, gen, grid, gate, params, x_best, e_best,
                                   params.maxfun - rec.nfev);
            } else if (++since_improve >= params.polish_interval) {
                since_improve = 0;
                rec.nfev += polish(kind, gen, grid, gate, params, x_best, e_best,
                                   params.maxfun - rec.nfev);
            }
            if (e_best < rec.history.back()) rec.history.push_back(e_best);
            if (rec.nfev >= params.maxfun) out_of_budget = true;
        }
    }
    if (out_of_budget) rec.termination = "maxfun";

    rec.final_value = e_best;
    rec.f = to_controls(x_best, K);
    rec.g.u = rec.f.u;
    rec.g.w1 = rec.f.n1.cwiseSqrt();
    rec.g.w2 = rec.f.n2.cwiseSqrt();
    rec.final_sd =
        kind == ObjectiveKind::SD ? e_best : sd_at(gen, grid, rec.f, gate);
    rec.grad_norm =
        stop_norm(grad_objective(kind, gen, grid, rec.g, gate, params.grad), grid);
    rec.wall_ms = elapsed_ms(t0);
    return rec;
}

}  // namespace qcl
