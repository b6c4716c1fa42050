#include "rwre/stochorder.hpp"

#include <algorithm>
#include <cmath>

#include "rwre/polymer_dt.hpp"

namespace rwre {

ConcaveOrderReport concave_order_exact(const FiniteDist& x, const FiniteDist& y, double tol) {
    ConcaveOrderReport rep;
    rep.mean_gap = x.mean() - y.mean();
    std::vector<double> points;
    points.reserve(x.size() + y.size());
    points.insert(points.end(), x.values().begin(), x.values().end());
    points.insert(points.end(), y.values().begin(), y.values().end());
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    rep.test_points = points;
    rep.point_gaps.reserve(points.size());
    double worst = 0.0;
    for (double a : points) {
        const double gap = x.expected_min(a) - y.expected_min(a);
        rep.point_gaps.push_back(gap);
        worst = std::max(worst, gap);
    }
    rep.worst_violation = std::max(worst, std::abs(rep.mean_gap));
    rep.ordered = std::abs(rep.mean_gap) <= tol && worst <= tol;
    return rep;
}

double normal_upper_quantile(double tail_prob) {
    if (tail_prob <= 0.0 || tail_prob >= 1.0) throw ConfigError("tail probability in (0,1)");
    const double p = tail_prob;  // P(Z > q) = p  <=>  q = Phi^{-1}(1 - p)
    // Acklam coefficients for the inverse normal cdf at 1 - p
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double pl = 1.0 - p;  // quantile level
    const double low = 0.02425;
    double q;
    if (pl < low) {
        const double r = std::sqrt(-2.0 * std::log(pl));
        q = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
            ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
    } else if (pl <= 1.0 - low) {
        const double r = pl - 0.5;
        const double s = r * r;
        q = (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) * r /
            (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0);
    } else {
        const double r = std::sqrt(-2.0 * std::log(1.0 - pl));
        q = -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
            ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
    }
    return q;
}

EmpiricalOrderReport concave_order_empirical(std::span<const double> xs,
                                             std::span<const double> ys,
                                             std::span<const double> grid, double z_threshold,
                                             bool bonferroni) {
    EmpiricalOrderReport rep;
    rep.z_threshold = z_threshold;
    rep.effective_z = z_threshold;
    if (bonferroni && grid.size() > 1) {
        const double alpha = 0.5 * std::erfc(z_threshold / std::sqrt(2.0));  // one-sided
        rep.effective_z =
            normal_upper_quantile(alpha / static_cast<double>(grid.size() + 1));
    }
    rep.grid_size = grid.size();
    rep.small_sample_warning = xs.size() < 30 || ys.size() < 30;

    auto stats_min = [](std::span<const double> v, double a) {
        std::vector<double> clipped;
        clipped.reserve(v.size());
        for (double x : v) clipped.push_back(std::min(x, a));
        return mean_se(clipped);
    };
    auto stats_raw = [](std::span<const double> v) {
        return mean_se(std::vector<double>(v.begin(), v.end()));
    };

    const MeanSE mx = stats_raw(xs);
    const MeanSE my = stats_raw(ys);
    rep.mean_gap = mx.mean - my.mean;
    rep.mean_gap_se = std::sqrt(mx.se * mx.se + my.se * my.se);

    bool violation = false;
    for (double a : grid) {
        const MeanSE gx = stats_min(xs, a);
        const MeanSE gy = stats_min(ys, a);
        EmpiricalGap g;
        g.point = a;
        g.gap = gx.mean - gy.mean;
        g.se = std::sqrt(gx.se * gx.se + gy.se * gy.se);
        rep.gaps.push_back(g);
        if (g.gap > rep.effective_z * g.se) violation = true;
    }
    if (std::abs(rep.mean_gap) > rep.effective_z * rep.mean_gap_se) violation = true;
    rep.consistent_with_order = !violation;
    return rep;
}

CouplingReport coupling_identity_check(const EnvSpec& spec, const IncrementDist& p1,
                                       const IncrementDist& q, int t, uint64_t cap, double tol,
                                       int threads) {
    if (p1.dim() != q.dim()) throw ConfigError("walk dimension mismatch");
    const IncrementDist p2 = convolve(p1, q);
    const LatticeWindow window =
        union_window(reach_window(p1.support(), t), reach_window(p2.support(), t));
    const uint64_t n_env = enumeration_size(spec, window, cap);

    // all q-paths y_0..y_t with their path probabilities
    uint64_t n_paths = 1;
    for (int s = 0; s < t; ++s) {
        if (n_paths > cap / q.size() + 1) throw ResourceError("shift-path enumeration exceeds cap");
        n_paths *= q.size();
    }
    std::vector<LatticePath> paths(n_paths);
    std::vector<double> path_prob(n_paths);
    for (uint64_t k = 0; k < n_paths; ++k) {
        LatticePath y(static_cast<size_t>(t) + 1, origin_site(q.dim()));
        uint64_t rem = k;
        double prob = 1.0;
        for (int s = 1; s <= t; ++s) {
            const size_t step = static_cast<size_t>(rem % q.size());
            rem /= q.size();
            y[static_cast<size_t>(s)] =
                add_sites(y[static_cast<size_t>(s - 1)], q.support()[step]);
            prob *= q.probs()[step];
        }
        paths[k] = std::move(y);
        path_prob[k] = prob;
    }

    CouplingReport rep;
    rep.n_environments = n_env;
    rep.n_shift_paths = n_paths;

    // one engine per shift path, bound to the common window; evaluating the
    // shifted partition function needs no materialized shifted field
    const PolymerDp dp2(p2, t, window);
    std::vector<PolymerDp> dp1_shifted;
    dp1_shifted.reserve(n_paths);
    for (uint64_t j = 0; j < n_paths; ++j) dp1_shifted.emplace_back(p1, t, window, paths[j]);

    const uint64_t block = 4096;
    const uint64_t n_blocks = (n_env + block - 1) / block;
    std::vector<double> partial(n_blocks, 0.0);
    for_each_block(n_env, block, threads, [&](uint64_t b, uint64_t lo, uint64_t hi) {
        double worst = 0.0;
        LatticeField f(t, window);
        PolymerDp::Scratch scratch2 = dp2.make_scratch();
        PolymerDp::Scratch scratch1 = dp1_shifted[0].make_scratch();
        for (uint64_t k = lo; k < hi; ++k) {
            double prob = 0.0;
            decode_lattice_config_into(spec, k, f, &prob);
            const double z2 = dp2.value(f, scratch2);
            NeumaierSum mixture;
            for (uint64_t j = 0; j < n_paths; ++j)
                mixture.add(path_prob[j] * dp1_shifted[j].value(f, scratch1));
            worst = std::max(worst, std::abs(mixture.value() - z2));
        }
        partial[b] = worst;
    });
    for (double w : partial) rep.max_defect = std::max(rep.max_defect, w);
    rep.ok = rep.max_defect <= tol;
    return rep;
}

bool majorization_concave_sum_check(std::span<const double> c, std::span<const double> d,
                                    double tol) {
    if (c.size() != d.size()) throw ConfigError("vector length mismatch");
    NeumaierSum sc, sd;
    for (double v : c) sc.add(v);
    for (double v : d) sd.add(v);
    // +-identity: equal totals
    if (std::abs(sc.value() - sd.value()) > tol) return false;
    std::vector<double> points;
    points.reserve(c.size() + d.size());
    points.insert(points.end(), c.begin(), c.end());
    points.insert(points.end(), d.begin(), d.end());
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    for (double a : points) {
        NeumaierSum fc, fd;
        for (double v : c) fc.add(std::min(v, a));
        for (double v : d) fd.add(std::min(v, a));
        if (fc.value() < fd.value() - tol) return false;
    }
    return true;
}

}  // namespace rwre
