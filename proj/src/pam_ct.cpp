#include "rwre/pam_ct.hpp"

#include <algorithm>
#include <cmath>

namespace rwre {

namespace {

/// Marks with time in [0, t], in time order.
std::vector<MarkPoint> marks_up_to(const MarkSet& marks, double t) {
    std::vector<MarkPoint> out;
    for (const auto& m : marks.marks())
        if (m.time <= t) out.push_back(m);
    return out;
}

double bonus_bound(const std::vector<MarkPoint>& marks) {
    double b = 1.0;
    for (const auto& m : marks)
        if (m.value > 0.0) b *= 1.0 + m.value;
    return b;
}

/// Splits [0, t] at the mark times; each interval is further divided so the
/// uniformization mean per piece stays <= 4 (keeps the series short and the
/// coefficients well scaled).
struct Schedule {
    std::vector<double> lengths;      // sub-interval lengths, in order
    std::vector<int> mark_after;      // index into marks applied after piece k, or -1
};

Schedule build_schedule(const std::vector<MarkPoint>& marks, double t, double kappa,
                        double max_piece = -1.0) {
    Schedule sched;
    double prev = 0.0;
    auto push_interval = [&](double len, int mark_idx) {
        int pieces = 1;
        if (kappa > 0.0) {
            double cap = 4.0 / kappa;  // kappa * piece <= 4
            if (max_piece > 0.0) cap = std::min(cap, max_piece);
            pieces = std::max(1, static_cast<int>(std::ceil(len / cap)));
        } else if (max_piece > 0.0) {
            pieces = std::max(1, static_cast<int>(std::ceil(len / max_piece)));
        }
        for (int k = 0; k < pieces; ++k) {
            sched.lengths.push_back(len / pieces);
            sched.mark_after.push_back(k + 1 == pieces ? mark_idx : -1);
        }
    };
    for (size_t m = 0; m < marks.size(); ++m) {
        const double len = marks[m].time - prev;
        if (len > 0.0) {
            push_interval(len, static_cast<int>(m));
        } else {
            // mark at time 0: apply without evolving
            sched.lengths.push_back(0.0);
            sched.mark_after.push_back(static_cast<int>(m));
        }
        prev = marks[m].time;
    }
    if (t - prev > 0.0) push_interval(t - prev, -1);
    return sched;
}

}  // namespace

IntervalEstimate ct_partition_exact(const MarkSet& marks, double kappa, double t, double eps,
                                    int min_radius, int max_radius) {
    if (eps <= 0.0) throw ConfigError("tolerance must be positive");
    if (t <= 0.0) throw ConfigError("horizon must be positive");
    if (t > marks.horizon() + 1e-12) throw ConfigError("horizon exceeds mark set horizon");
    if (kappa < 0.0) throw ConfigError("jump rate must be >= 0");

    const std::vector<MarkPoint> active = marks_up_to(marks, t);
    IntervalEstimate res;
    res.declared_eps = eps;

    if (kappa == 0.0) {
        // walk pinned at the origin: exact product over origin marks
        double z = 1.0;
        const Site o = origin_site(marks.dim());
        for (const auto& m : active)
            if (m.site == o) z *= 1.0 + m.value;
        res.lo = res.hi = z;
        return res;
    }

    const double bonus = bonus_bound(active);
    int radius = std::max(min_radius, certified_radius(kappa, t, eps / (2.0 * bonus)));
    if (max_radius > 0 && radius > max_radius) radius = max_radius;
    const Box box = Box::centered(marks.dim(), radius);

    const Schedule sched = build_schedule(active, t, kappa);
    size_t n_evolving = 0;
    for (double len : sched.lengths)
        if (len > 0.0) ++n_evolving;
    const double per_piece_target =
        n_evolving == 0 ? eps : eps / (2.0 * bonus * static_cast<double>(n_evolving));

    std::vector<double> u(box.size(), 0.0);
    u[box.index(origin_site(marks.dim()))] = 1.0;

    double spent_tails = 0.0;
    int terms_total = 0;
    for (size_t k = 0; k < sched.lengths.size(); ++k) {
        const double len = sched.lengths[k];
        if (len > 0.0) {
            const int terms = uniformization_terms(kappa * len, per_piece_target);
            spent_tails += evolve_uniformized(box, u, kappa, len, terms);
            terms_total += terms;
        }
        const int mi = sched.mark_after[k];
        if (mi >= 0) {
            const MarkPoint& m = active[static_cast<size_t>(mi)];
            if (box.contains(m.site)) u[box.index(m.site)] *= 1.0 + m.value;
            // marks outside the box only touch absorbed mass, which the
            // bound already covers
        }
    }
    NeumaierSum lo;
    for (double v : u) lo.add(v);
    const double bound =
        bonus * (spent_tails + poisson_tail(kappa * t, static_cast<uint64_t>(radius) + 1));
    if (bound > eps)
        throw ResourceError("certified bound " + std::to_string(bound) +
                            " cannot reach eps " + std::to_string(eps) +
                            " under the radius cap; required radius " +
                            std::to_string(certified_radius(kappa, t, eps / (2.0 * bonus))));
    res.lo = std::max(0.0, lo.value());
    res.hi = res.lo + bound;
    res.box_radius = radius;
    res.series_terms_total = terms_total;
    return res;
}

MCEstimate ct_partition_mc(const MarkSet& marks, double kappa, double t, uint64_t n,
                           uint64_t seed, int threads) {
    if (n < 1) throw ConfigError("need at least one path");
    if (t <= 0.0) throw ConfigError("horizon must be positive");
    const std::vector<MarkPoint> active = marks_up_to(marks, t);
    const int d = marks.dim();
    std::vector<double> weights(n);
    for_each_block(n, 1024, threads, [&](uint64_t, uint64_t lo_i, uint64_t hi_i) {
        for (uint64_t i = lo_i; i < hi_i; ++i) {
            Rng rng(substream_seed(seed, i));
            Site pos = origin_site(d);
            double next_jump = kappa > 0.0 ? rng.exponential(kappa) : 2.0 * t + 1.0;
            double w = 1.0;
            for (const auto& m : active) {
                while (next_jump < m.time) {
                    const uint64_t dir = rng.next_below(2 * static_cast<uint64_t>(d));
                    const size_t axis = static_cast<size_t>(dir >> 1);
                    pos[axis] += (dir & 1) ? 1 : -1;
                    next_jump += rng.exponential(kappa);
                }
                if (pos == m.site) {
                    w *= 1.0 + m.value;
                    if (w == 0.0) break;
                }
            }
            weights[i] = w;
        }
    });
    const MeanSE ms = mean_se(weights);
    return MCEstimate{ms.mean, ms.se, n};
}

OdeSolution pam_ode_solve(const MarkSet& marks, double kappa, double t, int box_radius,
                          double step, double eps) {
    if (t <= 0.0) throw ConfigError("horizon must be positive");
    if (step <= 0.0) throw ConfigError("step must be positive");
    if (eps <= 0.0) throw ConfigError("tolerance must be positive");
    if (kappa < 0.0) throw ConfigError("jump rate must be >= 0");

    const std::vector<MarkPoint> active = marks_up_to(marks, t);
    const double bonus = bonus_bound(active);
    if (kappa > 0.0) {
        const int required = certified_radius(kappa, t, eps / (2.0 * bonus));
        if (box_radius < required)
            throw WindowError("box too small: radius " + std::to_string(box_radius) +
                              " < required " + std::to_string(required) + " for eps " +
                              std::to_string(eps));
    }
    const Box box = Box::centered(marks.dim(), std::max(box_radius, 0));

    OdeSolution sol;
    sol.box = box;
    sol.u.assign(box.size(), 1.0);

    const Schedule sched = build_schedule(active, t, kappa, step);
    size_t n_evolving = 0;
    for (double len : sched.lengths)
        if (len > 0.0) ++n_evolving;
    const double per_piece_target =
        n_evolving == 0 ? eps : eps / (2.0 * bonus * static_cast<double>(n_evolving));

    double spent_tails = 0.0;
    for (size_t k = 0; k < sched.lengths.size(); ++k) {
        const double len = sched.lengths[k];
        if (len > 0.0 && kappa > 0.0) {
            const int terms = uniformization_terms(kappa * len, per_piece_target);
            spent_tails += evolve_uniformized(box, sol.u, kappa, len, terms);
        }
        const int mi = sched.mark_after[k];
        if (mi >= 0) {
            const MarkPoint& m = active[static_cast<size_t>(mi)];
            if (box.contains(m.site)) sol.u[box.index(m.site)] *= 1.0 + m.value;
        }
    }
    sol.u_origin = sol.u[box.index(origin_site(marks.dim()))];
    sol.error_bound =
        kappa > 0.0
            ? bonus * (spent_tails +
                       poisson_tail(kappa * t, static_cast<uint64_t>(box_radius) + 1))
            : 0.0;
    return sol;
}

// ---------------------------------------------------------------------------
// Ensemble estimators

CtEnvSamples ct_env_partition_samples(double rate, const MarkLaw& rho,
                                      const std::vector<double>& kappas, double t,
                                      uint64_t n_env, uint64_t seed, double eps, int dim,
                                      int threads) {
    if (kappas.empty()) throw ConfigError("need at least one kappa");
    if (n_env < 1) throw ConfigError("need at least one environment");
    double kappa_max = 0.0;
    for (double k : kappas) {
        if (k < 0.0) throw ConfigError("jump rate must be >= 0");
        kappa_max = std::max(kappa_max, k);
    }
    // one mark box covering the certified evolution box of every kappa, so
    // the same sampled environment serves all of them (paired estimates)
    const int radius =
        kappa_max > 0.0 ? certified_radius(kappa_max, t, eps / 4.0) + 1 : 0;

    CtEnvSamples out;
    out.kappas = kappas;
    out.z.assign(kappas.size(), std::vector<double>(n_env, 0.0));
    out.box_radius = radius;
    std::vector<double> widths(n_env, 0.0);
    for_each_block(n_env, 64, threads, [&](uint64_t, uint64_t lo, uint64_t hi) {
        for (uint64_t i = lo; i < hi; ++i) {
            const MarkSet marks =
                sample_mark_set(rate, rho, t, radius, dim, substream_seed(seed, i));
            double w = 0.0;
            for (size_t k = 0; k < kappas.size(); ++k) {
                // evolution box capped at the mark box: sites beyond it were
                // never sampled and must not be treated as mark-free
                const IntervalEstimate est =
                    ct_partition_exact(marks, kappas[k], t, eps, 0, radius);
                out.z[k][i] = est.mid();
                w = std::max(w, est.width());
            }
            widths[i] = w;
        }
    });
    for (double w : widths) out.max_interval_width = std::max(out.max_interval_width, w);
    return out;
}

LyapunovEstimate lyapunov_quenched_from_samples(const std::vector<double>& z, double t) {
    std::vector<double> logs;
    logs.reserve(z.size());
    uint64_t zeros = 0;
    for (double v : z) {
        if (v > 0.0)
            logs.push_back(std::log(v) / t);
        else
            ++zeros;
    }
    if (logs.empty())
        throw ResourceError("degenerate: every sampled environment kills the walk");
    const MeanSE ms = mean_se(logs);
    return LyapunovEstimate{ms.mean, ms.se, static_cast<double>(zeros) / z.size(), z.size()};
}

LyapunovEstimate lyapunov_annealed_from_samples(const std::vector<double>& z, double r,
                                                double t) {
    if (r <= 0.0) throw ConfigError("moment order must be positive");
    std::vector<double> powered;
    powered.reserve(z.size());
    uint64_t zeros = 0;
    for (double v : z) {
        powered.push_back(v > 0.0 ? std::pow(v, r) : 0.0);
        if (v <= 0.0) ++zeros;
    }
    const MeanSE ms = mean_se(powered);
    if (ms.mean <= 0.0)
        throw ResourceError("degenerate: ensemble average of Z^r vanishes");
    LyapunovEstimate out;
    out.estimate = std::log(ms.mean) / (r * t);
    out.se = ms.se / (ms.mean * r * t);  // delta method
    out.zero_fraction = static_cast<double>(zeros) / z.size();
    out.n = z.size();
    return out;
}

LyapunovEstimate lyapunov_quenched_estimate(double rate, const MarkLaw& rho, double kappa,
                                            double t, uint64_t n_env, uint64_t seed, double eps,
                                            int dim, int threads) {
    const CtEnvSamples s =
        ct_env_partition_samples(rate, rho, {kappa}, t, n_env, seed, eps, dim, threads);
    return lyapunov_quenched_from_samples(s.z[0], t);
}

LyapunovEstimate lyapunov_annealed_estimate(double rate, const MarkLaw& rho, double kappa,
                                            double r, double t, uint64_t n_env, uint64_t seed,
                                            double eps, int dim, int threads) {
    const CtEnvSamples s =
        ct_env_partition_samples(rate, rho, {kappa}, t, n_env, seed, eps, dim, threads);
    return lyapunov_annealed_from_samples(s.z[0], r, t);
}

}  // namespace rwre
