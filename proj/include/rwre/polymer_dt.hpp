#pragma once

// Discrete-time polymer partition function on Z^d by transfer-matrix dynamic
// programming, the consistency identity, exact joint laws under enumeration,
// annealed means, free-energy and fractional-moment estimators, and the
// exploratory static-environment comparison.

#include <cstdint>
#include <vector>

#include "rwre/distributions.hpp"
#include "rwre/envlat.hpp"
#include "rwre/increments.hpp"

namespace rwre {

struct MassProfile {
    int time = 0;
    Box box;
    std::vector<double> mass;
};

struct PartitionResult {
    double value = 0.0;
    int horizon = 0;
};

/// Z_t = sum_j u_t(j) with u_0 = delta_origin and
/// u_s(j) = (1 + omega(s, j)) * sum_i u_{s-1}(i) p(j - i).
/// A cell at -1 contributes factor 0 (hard obstacle). The field window must
/// cover the box hull of the walk's reachable set; undersized windows throw.
PartitionResult partition_function(const LatticeField& field, const IncrementDist& p, int t);

/// Same DP, returning the terminal mass profile as well.
PartitionResult partition_function_profile(const LatticeField& field, const IncrementDist& p,
                                           int t, MassProfile* profile);

/// Single-path weight F_t(omega, x) = prod_{s=1..t} (1 + omega(s, x_s)).
double path_weight(const LatticeField& field, const LatticePath& x, int t);

/// Reusable transfer-matrix engine for a fixed walk, horizon and field
/// window. Index maps are precomputed at construction, so evaluations are
/// flat array passes with no allocation; the enumeration kernels run one
/// engine over millions of decoded fields. An optional shift path binds the
/// engine to evaluate Z(theta^shift omega) directly. partition_function()
/// is the plain reference the engine is tested against.
class PolymerDp {
  public:
    PolymerDp(const IncrementDist& p, int t, const LatticeWindow& window);
    PolymerDp(const IncrementDist& p, int t, const LatticeWindow& window,
              const LatticePath& shift);

    struct Scratch {
        std::vector<std::vector<double>> u;
    };
    Scratch make_scratch() const;

    /// field must carry exactly the window the engine was bound to.
    double value(const LatticeField& field, Scratch& scratch) const;

  private:
    int horizon_;
    std::vector<uint64_t> slice_sizes_;                // reach box size per slice
    std::vector<uint64_t> window_sizes_;               // bound window size per slice
    std::vector<std::vector<double>> step_probs_;      // flattened transitions
    std::vector<std::vector<uint32_t>> step_src_;
    std::vector<std::vector<uint32_t>> step_dst_;
    std::vector<std::vector<uint32_t>> field_index_;   // reach idx -> window idx
};

/// Consistency identity F_t(omega, x+y) = F_t(theta^y(omega), x) within tol.
bool consistency_check(const LatticeField& field, const LatticePath& x, const LatticePath& y,
                       int t, double tol);

/// Exact joint law of (Z^{p1}_t, Z^{p2}_t) driven by the same environment,
/// under full enumeration of the i.i.d. spec on the union reach window.
JointDist joint_partition_distribution(const EnvSpec& spec, const IncrementDist& p1,
                                       const IncrementDist& p2, int t, uint64_t cap,
                                       int threads = 0);

/// E[Z_t] = R^t for any walk.
double annealed_mean(const EnvSpec& spec, int t);

struct FreeEnergyEstimate {
    double estimate = 0.0;  // mean of (1/t) log Z over surviving samples
    double se = 0.0;
    double zero_fraction = 0.0;  // fraction of samples with Z = 0
    uint64_t n_total = 0;
    uint64_t n_surviving = 0;
};

/// Finite-t estimator of the quenched free energy; biased at finite t.
/// Hard-obstacle specs report the zero fraction and condition on survival.
/// Throws if every sampled environment kills the walk.
FreeEnergyEstimate free_energy_estimate(const EnvSpec& spec, const IncrementDist& p, int t,
                                        uint64_t n_env, uint64_t seed, int threads = 0);

/// Exact E[(Z_t e^{-alpha t})^r] with alpha = log E[1 + omega], by
/// enumeration. r = 1 recovers the martingale normalization.
double martingale_fractional_moment_exact(const EnvSpec& spec, const IncrementDist& p, int t,
                                          double r, uint64_t cap, int threads = 0);

/// Monte Carlo version over sampled environments.
MeanSE martingale_fractional_moment_mc(const EnvSpec& spec, const IncrementDist& p, int t,
                                       double r, uint64_t n_env, uint64_t seed, int threads = 0);

// ---------------------------------------------------------------------------
// Static environment (time-constant field omega(s, i) = xi(i)); exploratory.

/// Lattice field with value xi(i) at every time slice, windows per `window`.
LatticeField static_field_from_sites(const std::vector<double>& xi, const Box& site_box,
                                     const LatticeWindow& window);

struct StaticEnvRow {
    double mean_z = 0.0;
    double concave_probe = 0.0;  // E[min(Z, annealed mean)]
    double convex_probe = 0.0;   // E[Z^2]
    double zero_fraction = 0.0;
    double se_mean = 0.0;
};

/// Monte Carlo table of concave/convex functionals of Z per walk, all walks
/// evaluated in the same sampled static environments. No ordering asserted.
std::vector<StaticEnvRow> static_env_experiment(const EnvSpec& xi_spec,
                                                const std::vector<IncrementDist>& walks, int t,
                                                uint64_t n_env, uint64_t seed, int threads = 0);

/// Exact joint laws of Z per walk under full enumeration of the static
/// site field (small instances; used to probe orderings exactly).
std::vector<FiniteDist> static_env_exact_laws(const EnvSpec& xi_spec,
                                              const std::vector<IncrementDist>& walks, int t,
                                              uint64_t cap);

}  // namespace rwre
