#pragma once

// Continuous-time partition functions in jump-mark environments: certified
// interval computation on a truncated box (uniformized flow between marks,
// multiplicative mark application), Monte Carlo path estimates, a direct
// solver for the lattice equation with jump resets, and finite-horizon
// Lyapunov-exponent estimators.

#include <cstdint>
#include <vector>

#include "rwre/envlat.hpp"
#include "rwre/increments.hpp"

namespace rwre {

struct IntervalEstimate {
    double lo = 0.0;
    double hi = 0.0;
    int box_radius = 0;
    int series_terms_total = 0;
    double declared_eps = 0.0;

    double mid() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

/// Z_t as a certified interval: the mass profile evolves between consecutive
/// mark times with the uniformized kernel on a box whose radius makes the
/// jump-count tail small; a mark (s, i, r) multiplies the mass at i by
/// (1 + r). lo is the absorbed-at-boundary value; hi = lo + bound where the
/// bound covers box exit and series truncation (weighted by the bonus
/// factor, so it stays sound when marks with r > 0 are present).
/// min_radius can force a larger box (the interval can only tighten);
/// max_radius > 0 caps the box, and the call fails if the certified bound
/// cannot reach eps under that cap.
IntervalEstimate ct_partition_exact(const MarkSet& marks, double kappa, double t, double eps,
                                    int min_radius = 0, int max_radius = 0);

struct MCEstimate {
    double mean = 0.0;
    double se = 0.0;
    uint64_t n = 0;
};

/// Path-sampling estimate: rate-kappa walks with exponential holding times,
/// weight = product of (1 + r) over marks whose site the walk occupies.
MCEstimate ct_partition_mc(const MarkSet& marks, double kappa, double t, uint64_t n,
                           uint64_t seed, int threads = 0);

struct OdeSolution {
    Box box;
    std::vector<double> u;      // profile at time t
    double u_origin = 0.0;
    double error_bound = 0.0;   // certified deviation from the full-lattice value
};

/// Integrates u(0,.) = 1, du/dt = kappa * Delta u between marks (per-interval
/// uniformized exponential, not Euler) with the jump reset
/// u(s, i) = u(s-, i) (1 + r) at each mark. Feynman-Kac: u(t, 0) equals the
/// partition function of the time-reversed mark set.
OdeSolution pam_ode_solve(const MarkSet& marks, double kappa, double t, int box_radius,
                          double step, double eps = 1e-8);

// ---------------------------------------------------------------------------
// Environment-ensemble estimators. Environments are sampled once on a box
// covering every requested kappa, so estimates across kappa are paired.

struct CtEnvSamples {
    std::vector<double> kappas;
    std::vector<std::vector<double>> z;  // z[k][i] = Z^{kappa_k}_t midpoint in env i
    double max_interval_width = 0.0;
    int box_radius = 0;
};

CtEnvSamples ct_env_partition_samples(double rate, const MarkLaw& rho,
                                      const std::vector<double>& kappas, double t,
                                      uint64_t n_env, uint64_t seed, double eps = 1e-9,
                                      int dim = 1, int threads = 0);

struct LyapunovEstimate {
    double estimate = 0.0;
    double se = 0.0;
    double zero_fraction = 0.0;
    uint64_t n = 0;
};

/// (1/t) log Z averaged over surviving environments; finite-t estimator of
/// the quenched exponent, bias documented. Reports the zero fraction when
/// hard obstacles make Z = 0 possible.
LyapunovEstimate lyapunov_quenched_from_samples(const std::vector<double>& z, double t);

/// (1/(r t)) log of the ensemble average of Z^r, delta-method standard error.
LyapunovEstimate lyapunov_annealed_from_samples(const std::vector<double>& z, double r, double t);

LyapunovEstimate lyapunov_quenched_estimate(double rate, const MarkLaw& rho, double kappa,
                                            double t, uint64_t n_env, uint64_t seed,
                                            double eps = 1e-9, int dim = 1, int threads = 0);

LyapunovEstimate lyapunov_annealed_estimate(double rate, const MarkLaw& rho, double kappa,
                                            double r, double t, uint64_t n_env, uint64_t seed,
                                            double eps = 1e-9, int dim = 1, int threads = 0);

}  // namespace rwre
