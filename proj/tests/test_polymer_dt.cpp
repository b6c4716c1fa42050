#include <cmath>
#include <functional>

#include "doctest.h"
#include "rwre/polymer_dt.hpp"
#include "rwre/stochorder.hpp"

using namespace rwre;

namespace {

/// Brute-force oracle: explicit sum over all walk paths of
/// P(path) * prod_s (1 + omega(s, x_s)). Independent of the DP.
double brute_force_partition(const LatticeField& field, const IncrementDist& p, int t) {
    double total = 0.0;
    std::function<void(int, const Site&, double, double)> recurse =
        [&](int s, const Site& pos, double prob, double weight) {
            if (s == t) {
                total += prob * weight;
                return;
            }
            for (size_t k = 0; k < p.size(); ++k) {
                const Site next = add_sites(pos, p.support()[k]);
                recurse(s + 1, next, prob * p.probs()[k],
                        weight * (1.0 + field.at(s + 1, next)));
            }
        };
    recurse(0, origin_site(p.dim()), 1.0, 1.0);
    return total;
}

LatticeField constant_field(double value, const IncrementDist& p, int t) {
    const LatticeWindow w = reach_window(p.support(), t);
    LatticeField f(t, w);
    for (int s = 1; s <= t; ++s)
        for (auto& v : f.slice_values(s)) v = value;
    return f;
}

/// Environment of the torus construction: open sites at time 1 are those
/// congruent to r mod (2K+1); flat afterwards.
LatticeField necessity_lattice_field(int r, int K, const IncrementDist& p, int t) {
    const LatticeWindow w = reach_window(p.support(), t);
    LatticeField f(t, w);
    const int period = 2 * K + 1;
    const Box& b1 = w.slices[0];
    for (int i = b1.lo[0]; i <= b1.hi[0]; ++i) {
        const int residue = ((i - r) % period + period) % period;
        f.set(1, {i}, residue == 0 ? 0.0 : -1.0);
    }
    return f;
}

}  // namespace

TEST_CASE("flat environment gives Z = 1 for every walk and horizon") {
    for (int t : {1, 3, 5}) {
        const IncrementDist p = IncrementDist::one_dim({-1, 0, 1}, {0.25, 0.5, 0.25});
        const LatticeField f = constant_field(0.0, p, t);
        CHECK(partition_function(f, p, t).value == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("single obstacle at (1,1) halves the two-path partition function") {
    const IncrementDist p = IncrementDist::symmetric_nn_1d();
    LatticeField f = constant_field(0.0, p, 1);
    f.set(1, {1}, -1.0);
    CHECK(partition_function(f, p, 1).value == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("torus obstacle environment pins Z_t = p(r)") {
    const IncrementDist p = IncrementDist::one_dim({-1, 0, 1}, {0.3, 0.45, 0.25});
    const int K = 1;
    for (int t : {1, 2, 3}) {
        for (int r = -K; r <= K; ++r) {
            const LatticeField f = necessity_lattice_field(r, K, p, t);
            const double expect = p.probs()[static_cast<size_t>(r + K)];
            CHECK(partition_function(f, p, t).value ==
                  doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("DP equals the brute-force path sum on random fields") {
    Rng seeds(123);
    const EnvSpec spec({{-1.0, 0.2}, {-0.5, 0.3}, {1.5, 0.5}});
    for (int rep = 0; rep < 25; ++rep) {
        const int t = 1 + static_cast<int>(seeds.next_below(5));
        const IncrementDist p = IncrementDist::one_dim({-1, 0, 1}, {0.3, 0.3, 0.4});
        const LatticeWindow w = reach_window(p.support(), t);
        const LatticeField f = sample_lattice_field(spec, t, w, seeds.next_u64());
        const double dp = partition_function(f, p, t).value;
        const double oracle = brute_force_partition(f, p, t);
        CHECK(dp == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("two-dimensional walks run through the same DP") {
    Rng seeds(808);
    const IncrementDist p(2, {Site{0, 0}, Site{1, 0}, Site{0, 1}}, {0.4, 0.3, 0.3});
    const EnvSpec spec({{-1.0, 0.3}, {0.5, 0.7}});
    for (int rep = 0; rep < 10; ++rep) {
        const int t = 1 + static_cast<int>(seeds.next_below(3));
        const LatticeWindow w = reach_window(p.support(), t);
        const LatticeField f = sample_lattice_field(spec, t, w, seeds.next_u64());
        CHECK(partition_function(f, p, t).value ==
              doctest::Approx(brute_force_partition(f, p, t)).epsilon(1e-12));
    }
}

TEST_CASE("terminal mass profile sums to the partition function") {
    const IncrementDist p = IncrementDist::symmetric_nn_1d();
    const EnvSpec spec({{-1.0, 0.25}, {1.0, 0.75}});
    const int t = 4;
    const LatticeField f = sample_lattice_field(spec, t, reach_window(p.support(), t), 6);
    MassProfile profile;
    const PartitionResult res = partition_function_profile(f, p, t, &profile);
    CHECK(profile.time == t);
    NeumaierSum total;
    for (double m : profile.mass) total.add(m);
    CHECK(total.value() == doctest::Approx(res.value).epsilon(1e-14));
    for (double m : profile.mass) CHECK(m >= 0.0);
}

TEST_CASE("dp engine matches the reference implementation, plain and shifted") {
    Rng seeds(555);
    const EnvSpec spec({{-1.0, 0.3}, {0.7, 0.7}});
    const IncrementDist p = IncrementDist::one_dim({-1, 0, 1}, {0.2, 0.5, 0.3});
    const IncrementDist q = IncrementDist::one_dim({0, 1}, {0.5, 0.5});
    const int t = 3;
    const LatticeWindow window =
        union_window(reach_window(p.support(), t),
                     reach_window(convolve(p, q).support(), t));
    const PolymerDp plain(p, t, window);
    PolymerDp::Scratch scratch = plain.make_scratch();
    for (int rep = 0; rep < 20; ++rep) {
        const LatticeField f = sample_lattice_field(spec, t, window, seeds.next_u64());
        CHECK(plain.value(f, scratch) ==
              doctest::Approx(partition_function(f, p, t).value).epsilon(1e-14));

        // shifted binding against materialized shift + reference DP
        LatticePath y = zero_path(1, t);
        for (int s = 1; s <= t; ++s)
            y[s] = {y[s - 1][0] + static_cast<int>(seeds.next_below(2))};
        const PolymerDp bound(p, t, window, y);
        PolymerDp::Scratch scratch2 = bound.make_scratch();
        const LatticeField shifted = shift_lattice(f, y);
        CHECK(bound.value(f, scratch2) ==
              doctest::Approx(partition_function(shifted, p, t).value).epsilon(1e-14));
    }

    // binding rejects windows that cannot hold the shifted reach
    LatticePath far = zero_path(1, t);
    far[t] = {100};
    CHECK_THROWS_AS(PolymerDp(p, t, window, far), WindowError);
}

TEST_CASE("undersized windows are rejected") {
    const IncrementDist p = IncrementDist::symmetric_nn_1d();
    LatticeWindow w;
    w.slices.push_back(Box(Site{0}, Site{1}));  // misses site -1 at time 1
    const LatticeField f(1, w);
    CHECK_THROWS_AS(partition_function(f, p, 1), WindowError);
}

TEST_CASE("raising an obstacle never decreases Z") {
    Rng seeds(321);
    const EnvSpec spec({{-1.0, 0.4}, {0.5, 0.6}});
    const IncrementDist p = IncrementDist::one_dim({0, 1}, {0.5, 0.5});
    for (int rep = 0; rep < 20; ++rep) {
        const int t = 3;
        const LatticeWindow w = reach_window(p.support(), t);
        LatticeField f = sample_lattice_field(spec, t, w, seeds.next_u64());
        const double before = partition_function(f, p, t).value;
        // raise the first obstacle found to 0
        bool raised = false;
        for (int s = 1; s <= t && !raised; ++s) {
            const Box& b = w.slices[static_cast<size_t>(s - 1)];
            for (uint64_t idx = 0; idx < b.size() && !raised; ++idx) {
                if (f.at(s, b.site(idx)) == -1.0) {
                    f.set(s, b.site(idx), 0.0);
                    raised = true;
                }
            }
        }
        const double after = partition_function(f, p, t).value;
        CHECK(after >= before - 1e-14);
    }
}

TEST_CASE("consistency identity F(w, x+y) = F(theta^y w, x)") {
    Rng rng(777);
    const EnvSpec spec({{-1.0, 0.15}, {0.0, 0.45}, {2.0, 0.4}});
    const int t = 4;
    // window wide enough for x + y and for the shifted lookups
    LatticeWindow w;
    for (int s = 1; s <= t; ++s) w.slices.push_back(Box::centered(1, 4 * s));
    int zero_weight_cases = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const LatticeField f = sample_lattice_field(spec, t, w, rng.next_u64());
        LatticePath x = zero_path(1, t), y = zero_path(1, t);
        for (int s = 1; s <= t; ++s) {
            x[s] = {x[s - 1][0] + static_cast<int>(rng.next_below(5)) - 2};
            y[s] = {y[s - 1][0] + static_cast<int>(rng.next_below(5)) - 2};
        }
        CHECK(consistency_check(f, x, y, t, 1e-12));
        if (path_weight(f, add_paths(x, y), t) == 0.0) ++zero_weight_cases;
    }
    CHECK(zero_weight_cases > 0);  // hard obstacles do appear along paths

    // y = 0 is trivially consistent
    const LatticeField f = sample_lattice_field(spec, t, w, 42);
    LatticePath x = zero_path(1, t);
    x[1] = {1};
    x[2] = {2};
    x[3] = {1};
    x[4] = {0};
    CHECK(consistency_check(f, x, zero_path(1, t), t, 0.0));
}

TEST_CASE("joint law: diagonal support for identical walks") {
    const EnvSpec spec = EnvSpec::bernoulli_obstacle(0.5);
    const IncrementDist p = IncrementDist::one_dim({0, 1}, {0.5, 0.5});
    const JointDist joint = joint_partition_distribution(spec, p, p, 2, 1 << 20);
    for (size_t k = 0; k < joint.size(); ++k) CHECK(joint.z1()[k] == joint.z2()[k]);
}

TEST_CASE("joint law marginal means equal R^t for different walks") {
    const EnvSpec spec({{-1.0, 0.3}, {1.0, 0.7}});
    const IncrementDist p1 = IncrementDist::one_dim({0, 1}, {0.5, 0.5});
    const IncrementDist p2 = IncrementDist::one_dim({-1, 0, 1}, {0.25, 0.5, 0.25});
    const int t = 2;
    const JointDist joint = joint_partition_distribution(spec, p1, p2, t, 1 << 22);
    const double rt = annealed_mean(spec, t);
    CHECK(std::abs(joint.mean1() - rt) <= 1e-10);
    CHECK(std::abs(joint.mean2() - rt) <= 1e-10);
    CHECK(std::abs(joint.mean1() - joint.mean2()) <= 1e-10);
}

TEST_CASE("one-cell joint law is the Bernoulli of the spec") {
    const double q = 0.35;
    const EnvSpec spec = EnvSpec::bernoulli_obstacle(q);
    const IncrementDist lazy = IncrementDist::dirac_origin(1);
    const JointDist joint = joint_partition_distribution(spec, lazy, lazy, 1, 100);
    const FiniteDist m = joint.marginal1();
    REQUIRE(m.size() == 2);
    CHECK(m.values()[0] == doctest::Approx(0.0));
    CHECK(m.probs()[0] == doctest::Approx(q));
    CHECK(m.values()[1] == doctest::Approx(1.0));
    CHECK(m.probs()[1] == doctest::Approx(1.0 - q));
}

TEST_CASE("annealed mean closed forms") {
    CHECK(annealed_mean(EnvSpec::constant(0.0), 7) == doctest::Approx(1.0));
    const double q = 0.2;
    CHECK(annealed_mean(EnvSpec::bernoulli_obstacle(q), 3) ==
          doctest::Approx(std::pow(1.0 - q, 3)));
}

TEST_CASE("free energy of a constant environment is exact with zero se") {
    const double c = 0.8;
    const IncrementDist p = IncrementDist::symmetric_nn_1d();
    const FreeEnergyEstimate fe = free_energy_estimate(EnvSpec::constant(c), p, 6, 50, 5);
    CHECK(fe.estimate == doctest::Approx(std::log(1.0 + c)).epsilon(1e-12));
    CHECK(fe.se == doctest::Approx(0.0));
    CHECK(fe.zero_fraction == 0.0);
}

TEST_CASE("lazy walk in a +-1 spec reports the survival fraction 2^-t") {
    const EnvSpec spec({{-1.0, 0.5}, {1.0, 0.5}});
    const IncrementDist lazy = IncrementDist::dirac_origin(1);
    const int t = 3;
    const uint64_t n = 20000;
    const FreeEnergyEstimate fe = free_energy_estimate(spec, lazy, t, n, 99);
    const double target = std::pow(2.0, -t);
    const double se = std::sqrt(target * (1.0 - target) / static_cast<double>(n));
    CHECK(std::abs((1.0 - fe.zero_fraction) - target) <= 3.0 * se);
    // survivors have Z = 2^t, so the estimate is exactly log 2
    CHECK(fe.estimate == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // all-zero degenerate case throws
    const EnvSpec dead({{-1.0, 1.0}});
    CHECK_THROWS_AS(free_energy_estimate(dead, lazy, 2, 10, 1), ResourceError);
}

TEST_CASE("free-energy comparison trend under convolution ordering") {
    // p more random than q (p = q * r) => free energy of the q-walk is below
    // the p-walk estimate within statistical slack
    const EnvSpec spec({{-0.9, 0.5}, {1.2, 0.5}});
    const IncrementDist q = IncrementDist::one_dim({0, 1}, {0.5, 0.5});
    const IncrementDist r = IncrementDist::one_dim({-1, 0}, {0.5, 0.5});
    const IncrementDist p = convolve(q, r);
    const int t = 12;
    const uint64_t n = 4000;
    const FreeEnergyEstimate fq = free_energy_estimate(spec, q, t, n, 1001);
    const FreeEnergyEstimate fp = free_energy_estimate(spec, p, t, n, 1002);
    const double slack = 3.0 * std::sqrt(fq.se * fq.se + fp.se * fp.se);
    CHECK(fq.estimate <= fp.estimate + slack);
}

TEST_CASE("martingale normalization and fractional moments") {
    const IncrementDist p = IncrementDist::one_dim({0, 1}, {0.5, 0.5});
    CHECK(martingale_fractional_moment_exact(EnvSpec::constant(0.0), p, 3, 0.5, 1000) ==
          doctest::Approx(1.0).epsilon(1e-12));

    const EnvSpec spec({{-1.0, 0.25}, {0.5, 0.75}});
    const double m1 = martingale_fractional_moment_exact(spec, p, 2, 1.0, 1 << 20);
    CHECK(std::abs(m1 - 1.0) <= 1e-10);

    CHECK_THROWS_AS(martingale_fractional_moment_exact(spec, p, 2, 1.5, 1 << 20), ConfigError);
}

TEST_CASE("fractional-moment monotonicity under convolution ordering, exact") {
    const EnvSpec spec({{-1.0, 0.4}, {1.0, 0.6}});
    const IncrementDist p1 = IncrementDist::one_dim({0, 1}, {0.6, 0.4});
    const IncrementDist q = IncrementDist::one_dim({0, 1}, {0.5, 0.5});
    const IncrementDist p2 = convolve(p1, q);
    const int t = 2;
    const double mp1 = martingale_fractional_moment_exact(spec, p1, t, 0.5, 1 << 22);
    const double mp2 = martingale_fractional_moment_exact(spec, p2, t, 0.5, 1 << 22);
    CHECK(mp1 <= mp2 + 1e-10);
}

TEST_CASE("static environment: flat field gives all ones") {
    const IncrementDist p = IncrementDist::symmetric_nn_1d();
    const auto rows = static_env_experiment(EnvSpec::constant(0.0), {p}, 3, 100, 3);
    CHECK(rows[0].mean_z == doctest::Approx(1.0));
    CHECK(rows[0].convex_probe == doctest::Approx(1.0));
    CHECK(rows[0].zero_fraction == 0.0);
}

TEST_CASE("static environment at t = 1 reduces to the i.i.d. case: order holds") {
    // a single time slice cannot tell a static field from an i.i.d.-in-time
    // one, so the concave comparison of the coupled pair must hold exactly
    const EnvSpec xi({{-1.0, 0.4}, {1.0, 0.6}});
    const IncrementDist p1 = IncrementDist::one_dim({0, 1}, {0.5, 0.5});
    const IncrementDist q = IncrementDist::one_dim({-1, 0}, {0.5, 0.5});
    const IncrementDist p2 = convolve(p1, q);
    const auto laws = static_env_exact_laws(xi, {p1, p2}, 1, 100000);
    CHECK(concave_order_exact(laws[0], laws[1], 1e-12).ordered);
}

TEST_CASE("static two-value field with a lazy walk takes the two closed-form values") {
    const double a = -0.5, b = 1.0, pa = 0.3;
    const EnvSpec xi({{a, pa}, {b, 1.0 - pa}});
    const IncrementDist lazy = IncrementDist::dirac_origin(1);
    const int t = 3;
    const auto laws = static_env_exact_laws(xi, {lazy}, t, 1000);
    REQUIRE(laws[0].size() == 2);
    CHECK(laws[0].values()[0] == doctest::Approx(std::pow(1.0 + a, t)));
    CHECK(laws[0].probs()[0] == doctest::Approx(pa));
    CHECK(laws[0].values()[1] == doctest::Approx(std::pow(1.0 + b, t)));
    CHECK(laws[0].probs()[1] == doctest::Approx(1.0 - pa));
}
