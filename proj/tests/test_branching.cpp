#include <cmath>

#include "doctest.h"
#include "rwre/branching.hpp"

using namespace rwre;

namespace {

const OffspringSpec kOneChild({{{0.0, 1.0}, 1.0}});                 // delta_1
const OffspringSpec kNoChild({{{1.0}, 1.0}});                       // delta_0
const OffspringSpec kTwoChildren({{{0.0, 0.0, 1.0}, 1.0}});         // delta_2
const OffspringSpec kMixed({{{1.0}, 0.25}, {{0.0, 0.0, 1.0}, 0.75}});

const MarkLaw kDisasters({{-1.0, 1.0}});

/// Single-site birth-catastrophe chain: population grows by binary branching
/// at rate lambda * k and is wiped to zero at rate `rate`. Survival at T is
/// exactly the no-catastrophe probability (the chain cannot recover from 0);
/// computed here through a small uniformized CTMC as an independent check.
double single_site_survival_oracle(double rate, double lambda, double T, int max_pop) {
    const int n = max_pop + 1;  // states 0..max_pop
    const double uni = rate + lambda * max_pop;
    std::vector<double> prob(static_cast<size_t>(n), 0.0);
    prob[1] = 1.0;
    const int terms = uniformization_terms(uni * T, 1e-12);
    std::vector<double> cur = prob, acc(prob.size(), 0.0), next(prob.size());
    // log-space Poisson weights: exp(-uni T) underflows for large uni T
    double log_coeff = -uni * T;
    for (size_t i = 0; i < prob.size(); ++i) acc[i] = std::exp(log_coeff) * cur[i];
    for (int m = 1; m <= terms; ++m) {
        // one step of the uniformized chain P = I + Q/uni
        std::fill(next.begin(), next.end(), 0.0);
        for (int k = 0; k < n; ++k) {
            const double mass = cur[static_cast<size_t>(k)];
            if (mass == 0.0) continue;
            if (k == 0) {
                next[0] += mass;
                continue;
            }
            const double birth = lambda * k;
            const double stay = 1.0 - (rate + birth) / uni;
            next[static_cast<size_t>(k)] += mass * stay;
            next[0] += mass * rate / uni;
            if (k + 1 < n)
                next[static_cast<size_t>(k + 1)] += mass * birth / uni;
            else
                next[static_cast<size_t>(k)] += mass * birth / uni;  // reflect at the cap
        }
        cur.swap(next);
        log_coeff += std::log(uni * T / m);
        const double coeff = std::exp(log_coeff);
        for (size_t i = 0; i < prob.size(); ++i) acc[i] += coeff * cur[i];
    }
    double alive = 0.0;
    for (int k = 1; k < n; ++k) alive += acc[static_cast<size_t>(k)];
    return alive;
}

}  // namespace

TEST_CASE("single-offspring law keeps exactly one walker") {
    const LatticeWindow w = reach_window({Site{-1}, Site{1}}, 10);
    const OffspringField field(kOneChild, 10, w, 3);
    const DenseOffspringView view(field);
    const BRWStateDT st = simulate_brw_dt(view, IncrementDist::symmetric_nn_1d(), 10, 7);
    CHECK(st.total() == 1);
    CHECK_FALSE(st.capped);
}

TEST_CASE("zero-offspring law dies at the first generation") {
    const LatticeWindow w = reach_window({Site{0}}, 3);
    const OffspringField field(kNoChild, 3, w, 3);
    const DenseOffspringView view(field);
    const BRWStateDT st = simulate_brw_dt(view, IncrementDist::dirac_origin(1), 3, 7);
    CHECK(st.total() == 0);
}

TEST_CASE("doubling lazy walk reaches 2^t at the origin") {
    const int t = 6;
    const LatticeWindow w = reach_window({Site{0}}, t);
    const OffspringField field(kTwoChildren, t, w, 3);
    const DenseOffspringView view(field);
    const BRWStateDT st = simulate_brw_dt(view, IncrementDist::dirac_origin(1), t, 7);
    CHECK(st.total() == 64);
    CHECK(st.counts.at(Site{0}) == 64);
}

TEST_CASE("population cap flags the partial result") {
    const int t = 40;
    const LatticeWindow w = reach_window({Site{0}}, t);
    const OffspringField field(kTwoChildren, t, w, 3);
    const DenseOffspringView view(field);
    const BRWStateDT st = simulate_brw_dt(view, IncrementDist::dirac_origin(1), t, 7, 1000);
    CHECK(st.capped);
    CHECK(st.total() > 1000);
}

TEST_CASE("hashed offspring field is deterministic and spec-consistent") {
    const HashedOffspringView view(kMixed, 991);
    const HashedOffspringView view2(kMixed, 991);
    int ones = 0, twos = 0;
    for (int s = 1; s <= 50; ++s)
        for (int i = -50; i <= 50; ++i) {
            const size_t a = view.atom_at(s, {i});
            CHECK(a == view2.atom_at(s, {i}));
            (a == 0 ? ones : twos) += 1;
        }
    const double frac = static_cast<double>(ones) / (ones + twos);
    CHECK(std::abs(frac - 0.25) < 0.02);
}

TEST_CASE("many-to-one, degenerate equalities") {
    // delta_1 offspring: both sides exactly 1
    const auto rep = many_to_one_check_dt(kOneChild, IncrementDist::symmetric_nn_1d(), 4, 200, 5);
    CHECK(rep.mc_mean == doctest::Approx(1.0));
    CHECK(rep.exact_z == doctest::Approx(1.0));

    // lazy walk, offspring mean m: Z = m^t exactly
    const auto lazy = many_to_one_check_dt(kTwoChildren, IncrementDist::dirac_origin(1), 5, 200, 5);
    CHECK(lazy.exact_z == doctest::Approx(32.0));
    CHECK(lazy.mc_mean == doctest::Approx(32.0));
}

TEST_CASE("many-to-one on a mixed field within three sigmas") {
    const auto rep =
        many_to_one_check_dt(kMixed, IncrementDist::symmetric_nn_1d(), 4, 20000, 17);
    CHECK(rep.deviation_sigmas <= 3.0);
    CHECK_FALSE(rep.any_capped);
}

TEST_CASE("discrete survival: doubling with no killing always survives") {
    const auto rows =
        survival_experiment_dt(kTwoChildren, {IncrementDist::dirac_origin(1)}, 10, 200, 3,
                               100000, 100, 4);
    CHECK(rows[0].survival_frequency == doctest::Approx(1.0));
    CHECK(rows[0].free_energy.estimate == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("discrete survival is non-increasing in the horizon (paired seeds)") {
    const OffspringSpec spec({{{1.0}, 0.3}, {{0.0, 0.0, 1.0}, 0.7}});
    const IncrementDist p = IncrementDist::symmetric_nn_1d();
    double prev = 1.1;
    for (int T : {5, 10, 20}) {
        const auto rows = survival_experiment_dt(spec, {p}, T, 3000, 12345, 100000, 100, 4);
        CHECK(rows[0].survival_frequency <= prev + 1e-12);
        prev = rows[0].survival_frequency;
    }
}

TEST_CASE("a heavy extinction mixture drives the frequency toward zero") {
    // half the cells wipe their occupants; the frequency decays with the
    // horizon and is already small at T = 24
    const OffspringSpec spec({{{1.0}, 0.5}, {{0.0, 0.0, 1.0}, 0.5}});
    const IncrementDist p = IncrementDist::symmetric_nn_1d();
    double prev = 1.1;
    double last = 1.0;
    for (int T : {6, 12, 24}) {
        const auto rows = survival_experiment_dt(spec, {p}, T, 2000, 777, 100000, 100, 4);
        CHECK(rows[0].survival_frequency <= prev + 1e-12);
        prev = rows[0].survival_frequency;
        last = rows[0].survival_frequency;
    }
    CHECK(last < 0.1);
}

TEST_CASE("ct branching: single walker with no disasters survives") {
    const MarkSet empty(1.0, 1, 2, {});
    const CTBranchResult res = simulate_brw_ct(empty, {1.0, 0.0, 1.0}, 5);
    CHECK(res.alive == 1);
}

TEST_CASE("ct branching: pinned walker dies at the origin disaster") {
    const MarkSet ms(1.0, 1, 1, {{0.4, {0}, -1.0}});
    const CTBranchResult res = simulate_brw_ct(ms, {0.0, 0.0, 1.0}, 5, 1000000, true);
    CHECK(res.alive == 0);
    REQUIRE(res.events.size() == 1);
    CHECK(res.events[0].type == CTEventType::Disaster);
    CHECK(res.events[0].time == doctest::Approx(0.4));
    CHECK(res.events[0].killed == 1);
}

TEST_CASE("yule process mean matches e^{lambda t}") {
    const MarkSet empty(1.0, 1, 1, {});
    const double lambda = 1.2, t = 1.0;
    const uint64_t n = 20000;
    std::vector<double> counts(n);
    for (uint64_t i = 0; i < n; ++i)
        counts[i] = static_cast<double>(
            simulate_brw_ct(empty, {0.0, lambda, t}, substream_seed(777, i)).alive);
    const MeanSE ms = mean_se(counts);
    CHECK(std::abs(ms.mean - std::exp(lambda * t)) <= 3.0 * ms.se);
}

TEST_CASE("event log conserves lineages") {
    const MarkSet ms = sample_mark_set(1.0, kDisasters, 1.0, 6, 1, 9);
    const CTBranchResult res = simulate_brw_ct(ms, {1.0, 1.5, 1.0}, 31, 1000000, true);
    long long alive = 1;
    for (const auto& ev : res.events) {
        switch (ev.type) {
            case CTEventType::Branch:
                CHECK(ev.child_a >= 0);
                CHECK(ev.child_b >= 0);
                alive += 1;  // parent replaced by two children
                break;
            case CTEventType::Disaster:
                alive -= ev.killed;
                break;
            case CTEventType::Jump:
                break;
        }
        CHECK(alive >= 0);
    }
    CHECK(alive == res.alive);
}

TEST_CASE("ct many-to-one: lambda = 0 reduces to the mc/exact comparison") {
    const MarkSet ms = sample_mark_set(1.0, kDisasters, 1.0, 12, 1, 41);
    const auto rep = many_to_one_check_ct(ms, {1.0, 0.0, 1.0}, 20000, 1e-6, 13);
    CHECK(rep.within);
}

TEST_CASE("ct many-to-one: no disasters gives e^{lambda t} on both sides") {
    const MarkSet empty(1.0, 1, 8, {});
    const auto rep = many_to_one_check_ct(empty, {0.7, 0.5, 1.0}, 20000, 1e-8, 19);
    CHECK(rep.within);
    CHECK(rep.exact_lo == doctest::Approx(std::exp(0.5)).epsilon(1e-6));
}

TEST_CASE("ct survival at kappa = 0 matches the single-site oracle") {
    const double rate = 1.0, lambda = 1.0, T = 3.0;
    const uint64_t n = 20000;
    const auto cells = survival_experiment_ct(rate, {0.0}, {lambda}, T, n, 99);
    const double oracle = single_site_survival_oracle(rate, lambda, T, 400);
    // the chain dies exactly at the first catastrophe
    CHECK(oracle == doctest::Approx(std::exp(-rate * T)).epsilon(1e-6));
    const double se = cells[0].frequency_se;
    CHECK(std::abs(cells[0].survival_frequency - oracle) <= 3.0 * se + 1e-3);
}

TEST_CASE("ct survival increases with kappa at fixed lambda (paired)") {
    const auto cells = survival_experiment_ct(1.0, {0.5, 2.0}, {1.5}, 6.0, 3000, 1234, 20000);
    REQUIRE(cells.size() == 2);
    const double sigma = 3.0 * std::hypot(cells[0].frequency_se, cells[1].frequency_se);
    CHECK(cells[1].survival_frequency >= cells[0].survival_frequency - sigma);
}
