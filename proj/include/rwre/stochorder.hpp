#pragma once

// Stochastic-order testers: exact concave order between finite laws (angle
// functions min(., a) plus affine generate the concave cone on a finite
// support), an empirical version with confidence bands, the convolution
// coupling identity, and the permutation-averaging majorization inequality.

#include <cstdint>
#include <span>
#include <vector>

#include "rwre/distributions.hpp"
#include "rwre/envlat.hpp"
#include "rwre/increments.hpp"

namespace rwre {

struct ConcaveOrderReport {
    bool ordered = false;
    double mean_gap = 0.0;                  // E[X] - E[Y]
    std::vector<double> test_points;        // union of atom values
    std::vector<double> point_gaps;         // E[min(X,a)] - E[min(Y,a)]
    double worst_violation = 0.0;           // max positive gap (0 if none)
};

/// X <=_cv Y iff E[X] = E[Y] (within tol) and E[min(X,a)] <= E[min(Y,a)] +
/// tol at every atom a of the joint support.
ConcaveOrderReport concave_order_exact(const FiniteDist& x, const FiniteDist& y, double tol);

struct EmpiricalGap {
    double point = 0.0;
    double gap = 0.0;  // estimate of E[min(X,a)] - E[min(Y,a)]
    double se = 0.0;
};

struct EmpiricalOrderReport {
    bool consistent_with_order = false;  // no gap positive at z_threshold sigmas
    bool small_sample_warning = false;   // n < 30 on either side
    double z_threshold = 3.0;
    double effective_z = 3.0;  // after the optional Bonferroni adjustment
    size_t grid_size = 0;
    double mean_gap = 0.0;
    double mean_gap_se = 0.0;
    std::vector<EmpiricalGap> gaps;
};

/// Statistical surrogate for the exact tester at Monte Carlo scale;
/// unpaired samples, normal-approximation bands. No multiple-testing
/// correction by default (the grid size is reported); with `bonferroni` the
/// per-point threshold is raised so the familywise level matches a single
/// z_threshold test.
EmpiricalOrderReport concave_order_empirical(std::span<const double> xs,
                                             std::span<const double> ys,
                                             std::span<const double> grid, double z_threshold,
                                             bool bonferroni = false);

/// Upper-tail standard normal quantile (Acklam's rational approximation;
/// relative error ~1e-9, ample for test thresholds).
double normal_upper_quantile(double tail_prob);

struct CouplingReport {
    double max_defect = 0.0;
    bool ok = false;
    uint64_t n_environments = 0;
    uint64_t n_shift_paths = 0;
};

/// Verifies, for every enumerable environment, the pathwise identity
///   sum_y Q(y) Z^{p1}(theta^y omega) = Z^{p1*q}(omega),
/// with Q the path law of the q-increment walk up to horizon t.
CouplingReport coupling_identity_check(const EnvSpec& spec, const IncrementDist& p1,
                                       const IncrementDist& q, int t, uint64_t cap, double tol,
                                       int threads = 0);

/// Whether sum_i f(c_i) >= sum_i f(d_i) for the generating concave family
/// f in {min(., a)} union {+-identity}; equivalent to c majorized by d.
bool majorization_concave_sum_check(std::span<const double> c, std::span<const double> d,
                                    double tol);

}  // namespace rwre
