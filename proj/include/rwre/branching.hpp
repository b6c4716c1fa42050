#pragma once

// Branching random walks in space-time random environments: discrete time
// (offspring field + displacement law) and continuous time (rate-kappa
// motion, rate-lambda binary branching, disaster killing), with many-to-one
// verification against the polymer partition function and survival-phase
// experiments.

#include <cstdint>
#include <map>
#include <vector>

#include "rwre/envlat.hpp"
#include "rwre/increments.hpp"
#include "rwre/pam_ct.hpp"
#include "rwre/polymer_dt.hpp"

namespace rwre {

// ---------------------------------------------------------------------------
// Discrete time

/// Read-only view of an offspring environment: one spec atom per cell.
class OffspringFieldView {
  public:
    virtual ~OffspringFieldView() = default;
    virtual const OffspringSpec& spec() const = 0;
    virtual size_t atom_at(int s, const Site& i) const = 0;
};

class DenseOffspringView final : public OffspringFieldView {
  public:
    explicit DenseOffspringView(const OffspringField& field) : field_(&field) {}
    const OffspringSpec& spec() const override { return field_->spec(); }
    size_t atom_at(int s, const Site& i) const override { return field_->atom_at(s, i); }

  private:
    const OffspringField* field_;
};

/// Unbounded field realized lazily by hashing (seed, s, site); the same seed
/// always yields the same field, so runs with different walks can share an
/// environment without materializing a window.
class HashedOffspringView final : public OffspringFieldView {
  public:
    HashedOffspringView(const OffspringSpec& spec, uint64_t seed);
    const OffspringSpec& spec() const override { return *spec_; }
    size_t atom_at(int s, const Site& i) const override;

  private:
    const OffspringSpec* spec_;
    uint64_t seed_;
    std::vector<double> cum_;  // cumulative atom probabilities
};

struct BRWStateDT {
    int generation = 0;
    std::map<Site, long long> counts;
    bool capped = false;  // population cap hit; result is partial

    long long total() const {
        long long n = 0;
        for (const auto& [site, c] : counts) n += c;
        return n;
    }
};

/// Exact simulation: each particle of generation s-1 moves by a p-step and
/// is then replaced by a number of descendants drawn from the offspring law
/// of the cell it arrived in (time slice s). This placement matches the
/// partition-function recursion, making the many-to-one identity pathwise.
BRWStateDT simulate_brw_dt(const OffspringFieldView& eta, const IncrementDist& p, int t,
                           uint64_t seed, uint64_t pop_cap = 1000000);

struct ManyToOneReportDT {
    double mc_mean = 0.0;
    double mc_se = 0.0;
    double exact_z = 0.0;
    double deviation_sigmas = 0.0;  // |mc_mean - exact| / se
    uint64_t n = 0;
    bool any_capped = false;
};

/// Samples one offspring field, runs n branching walks in that fixed field,
/// and compares the mean population at time t with the polymer partition
/// function of the induced environment.
ManyToOneReportDT many_to_one_check_dt(const OffspringSpec& spec, const IncrementDist& p, int t,
                                       uint64_t n, uint64_t seed, int threads = 0);

struct SurvivalReportDT {
    double survival_frequency = 0.0;
    double frequency_se = 0.0;
    double capped_fraction = 0.0;  // runs stopped at the cap (counted as survived)
    FreeEnergyEstimate free_energy;
    uint64_t n = 0;
};

/// Survival frequency at generation T over jointly resampled (environment,
/// branching) randomness, paired with the free-energy estimate for the same
/// spec; emitted as evidence, no ordering asserted. Walks share environment
/// seeds so frequencies across walks are paired.
std::vector<SurvivalReportDT> survival_experiment_dt(const OffspringSpec& spec,
                                                     const std::vector<IncrementDist>& walks,
                                                     int T, uint64_t n, uint64_t seed,
                                                     uint64_t pop_cap = 100000,
                                                     uint64_t fe_n_env = 2000, int fe_t = 12,
                                                     int threads = 0);

// ---------------------------------------------------------------------------
// Continuous time

struct CTBranchParams {
    double kappa = 0.0;   // per-particle jump rate
    double lambda = 0.0;  // per-particle binary branching rate
    double horizon = 0.0;
};

enum class CTEventType { Jump, Branch, Disaster };

struct CTEvent {
    double time = 0.0;
    CTEventType type = CTEventType::Jump;
    Site site;
    long long particle = -1;   // jumped particle / branching parent
    long long child_a = -1, child_b = -1;
    long long killed = 0;      // disaster body count
};

struct CTBranchResult {
    std::map<Site, long long> counts;  // occupancy at the horizon
    long long alive = 0;
    bool capped = false;
    std::vector<CTEvent> events;  // filled when log_events is set
};

/// Event-driven quenched simulation in a fixed mark set: exponential clocks
/// per particle for jumps and binary branching, disasters applied at their
/// mark times (marks with r > -1 are survival thinnings of strength 1+r).
CTBranchResult simulate_brw_ct(const MarkSet& marks, const CTBranchParams& params, uint64_t seed,
                               uint64_t pop_cap = 1000000, bool log_events = false);

struct ManyToOneReportCT {
    double mc_mean = 0.0;
    double mc_se = 0.0;
    double exact_lo = 0.0, exact_hi = 0.0;  // e^{lambda t} * certified interval
    bool within = false;                     // mc mean inside the 3-sigma enclosure
    uint64_t n = 0;
    bool any_capped = false;
};

/// MC mean of the population at t against e^{lambda t} x the certified
/// partition-function interval.
ManyToOneReportCT many_to_one_check_ct(const MarkSet& marks, const CTBranchParams& params,
                                       uint64_t n, double eps, uint64_t seed, int threads = 0);

struct SurvivalCellCT {
    double kappa = 0.0, lambda = 0.0;
    double survival_frequency = 0.0;
    double frequency_se = 0.0;
    double capped_fraction = 0.0;
};

/// Survival frequencies at horizon T for each (kappa, lambda) cell, with the
/// disaster environment sampled afresh per replica (per-site clocks realized
/// lazily, exact in law for Poisson disasters).
std::vector<SurvivalCellCT> survival_experiment_ct(double disaster_rate,
                                                   const std::vector<double>& kappas,
                                                   const std::vector<double>& lambdas, double T,
                                                   uint64_t n, uint64_t seed,
                                                   uint64_t pop_cap = 100000, int dim = 1,
                                                   int threads = 0);

}  // namespace rwre
