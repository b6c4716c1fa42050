#pragma once

// Step distributions of walks: convolution, the majorization order with
// certificates, unimodality checks, special families, and the rate-kappa
// simple-random-walk kernel with a certified truncation error.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rwre/common.hpp"
#include "rwre/geometry.hpp"

namespace rwre {

// ---------------------------------------------------------------------------

class IncrementDist {
  public:
    IncrementDist(int dim, std::vector<Site> support, std::vector<double> probs);

    int dim() const { return dim_; }
    const std::vector<Site>& support() const { return support_; }
    const std::vector<double>& probs() const { return probs_; }
    size_t size() const { return support_.size(); }

    size_t sample_index(Rng& rng) const;
    const Site& sample_step(Rng& rng) const { return support_[sample_index(rng)]; }

    static IncrementDist dirac_origin(int dim) {
        return IncrementDist(dim, {origin_site(dim)}, {1.0});
    }
    /// d=1 helper: sites given as plain integers.
    static IncrementDist one_dim(std::vector<int> sites, std::vector<double> probs);
    static IncrementDist symmetric_nn_1d() { return one_dim({-1, 1}, {0.5, 0.5}); }

  private:
    int dim_;
    std::vector<Site> support_;
    std::vector<double> probs_;
};

/// (p*q)(k) = sum_j p(j) q(k-j); support is the exact sumset.
IncrementDist convolve(const IncrementDist& p, const IncrementDist& q);

/// n-fold convolution power (n >= 1).
IncrementDist convolve_power(const IncrementDist& p, int n);

// ---------------------------------------------------------------------------
// Majorization with certificates.

struct MajorizationCertificate {
    bool majorized = false;
    bool mass_mismatch = false;
    std::vector<double> partial_sum_gaps;  // gap_k = Q_k - P_k (descending sorts)
    std::optional<size_t> failing_index;
};

/// Whether p is majorized by q: descending partial sums of p dominated by
/// those of q, equal total mass (both within tol). Shorter vectors are
/// implicitly zero-padded to the common length.
MajorizationCertificate is_majorized(std::span<const double> p, std::span<const double> q,
                                     double tol);

/// Increment-distribution variant: masses are compared on the union support.
MajorizationCertificate is_majorized(const IncrementDist& p, const IncrementDist& q, double tol);

/// d=1 only: p(i) = p(-i) and p non-increasing on i >= 0 (tolerance 1e-12).
bool is_symmetric_unimodal(const IncrementDist& p, double tol = 1e-12);

/// probs proportional to exp(-|i|^alpha) on {-K..K}.
IncrementDist heavy_tail_increments(double alpha, int K);

// ---------------------------------------------------------------------------
// Continuous-time simple random walk (jump rate kappa, uniform neighbor
// steps). The kernel on a finite box is computed by uniformization,
//   exp(kappa t (S - I)) = e^{-kappa t} sum_n (kappa t)^n / n! S^n,
// with S the one-step stencil and absorption outside the box. The certified
// error bound dominates the deviation from the unrestricted kernel.

struct CTWalkParams {
    double kappa = 0.0;
    int dim = 1;
};

/// One stencil application on a box-indexed mass vector: each site sends
/// mass/(2d) to each neighbor; mass leaving the box is absorbed (dropped).
void apply_srw_stencil(const Box& box, const std::vector<double>& in, std::vector<double>& out);

/// In-place uniformized flow u <- e^{kappa dt (S - I)} u truncated at
/// `terms`; returns the spent Poisson tail P(Pois(kappa dt) >= terms + 1).
double evolve_uniformized(const Box& box, std::vector<double>& u, double kappa, double dt,
                          int terms);

/// Smallest n with P(Pois(mean) >= n + 1) <= target (capped; throws
/// ResourceError if the cap cannot reach the target).
int uniformization_terms(double mean, double target, int cap = 100000);

struct CtKernelResult {
    Box box;
    std::vector<double> matrix;  // row-major (box.size() x box.size()); row = start site
    double error_bound = 0.0;
    int series_terms = 0;
};

/// Transition probabilities of the rate-kappa walk restricted to the box
/// {-R..R}^d with absorption at exit. error_bound = series tail + P(>= R
/// jumps in [0,t]).
CtKernelResult ct_srw_kernel(const CTWalkParams& params, double t, int radius, double eps);

/// Box radius with P(Pois(kappa t) >= R + 1) <= target.
int certified_radius(double kappa, double t, double target, int cap = 4096);

}  // namespace rwre
