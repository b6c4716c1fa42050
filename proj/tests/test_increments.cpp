#include <cmath>

#include "doctest.h"
#include "rwre/increments.hpp"

using namespace rwre;

TEST_CASE("convolution identity, commutativity, binomial example") {
    const IncrementDist p = IncrementDist::one_dim({-1, 0, 1}, {0.2, 0.5, 0.3});
    const IncrementDist delta = IncrementDist::dirac_origin(1);
    const IncrementDist same = convolve(p, delta);
    REQUIRE(same.size() == p.size());
    for (size_t k = 0; k < p.size(); ++k) {
        CHECK(same.support()[k] == p.support()[k]);
        CHECK(same.probs()[k] == doctest::Approx(p.probs()[k]));
    }

    // Bin(1,1/2) * Bin(1,1/2) = (1/4, 1/2, 1/4) on {0,1,2}
    const IncrementDist b = IncrementDist::one_dim({0, 1}, {0.5, 0.5});
    const IncrementDist bb = convolve(b, b);
    REQUIRE(bb.size() == 3);
    CHECK(bb.support()[0] == Site{0});
    CHECK(bb.probs()[0] == doctest::Approx(0.25));
    CHECK(bb.probs()[1] == doctest::Approx(0.5));
    CHECK(bb.probs()[2] == doctest::Approx(0.25));

    const IncrementDist q = IncrementDist::one_dim({-2, 1}, {0.4, 0.6});
    const IncrementDist pq = convolve(p, q);
    const IncrementDist qp = convolve(q, p);
    REQUIRE(pq.size() == qp.size());
    for (size_t k = 0; k < pq.size(); ++k) {
        CHECK(pq.support()[k] == qp.support()[k]);
        CHECK(pq.probs()[k] == doctest::Approx(qp.probs()[k]).epsilon(1e-14));
    }
    double mass = 0.0;
    for (double w : pq.probs()) mass += w;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(convolve(p, IncrementDist::dirac_origin(2)), ConfigError);
}

TEST_CASE("majorization: frozen example and extremes") {
    // p=(.5,.3,.2), q=(.6,.3,.1): partial sums (.5,.8,1) vs (.6,.9,1)
    const std::vector<double> p = {0.5, 0.3, 0.2}, q = {0.6, 0.3, 0.1};
    const auto cert = is_majorized(p, q, 1e-12);
    CHECK(cert.majorized);
    REQUIRE(cert.partial_sum_gaps.size() == 3);
    CHECK(cert.partial_sum_gaps[0] == doctest::Approx(0.1));
    CHECK(cert.partial_sum_gaps[1] == doctest::Approx(0.1));
    CHECK(cert.partial_sum_gaps[2] == doctest::Approx(0.0));
    CHECK_FALSE(is_majorized(q, p, 1e-12).majorized);
    CHECK(is_majorized(q, p, 1e-12).failing_index.value() == 0);

    // uniform is minimal, dirac maximal
    Rng rng(4);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 5;
        std::vector<double> r(n);
        double mass = 0.0;
        for (auto& x : r) {
            x = rng.next_double();
            mass += x;
        }
        for (auto& x : r) x /= mass;
        const std::vector<double> unif(n, 1.0 / n);
        std::vector<double> dirac(n, 0.0);
        dirac[0] = 1.0;
        CHECK(is_majorized(unif, r, 1e-12).majorized);
        CHECK(is_majorized(r, dirac, 1e-12).majorized);
    }

    // unequal masses flag
    const auto bad = is_majorized(std::vector<double>{0.5, 0.5},
                                  std::vector<double>{0.9, 0.3}, 1e-9);
    CHECK_FALSE(bad.majorized);
    CHECK(bad.mass_mismatch);
}

TEST_CASE("majorization is reflexive, transitive, permutation-blind") {
    Rng rng(9);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> a(4), perm;
        double mass = 0.0;
        for (auto& x : a) {
            x = rng.next_double();
            mass += x;
        }
        for (auto& x : a) x /= mass;
        perm = {a[2], a[0], a[3], a[1]};
        CHECK(is_majorized(a, a, 1e-12).majorized);
        CHECK(is_majorized(a, perm, 1e-12).majorized);
        CHECK(is_majorized(perm, a, 1e-12).majorized);

        // transitivity along a chain of uniform mixings: c <= b <= a
        auto mix = [&](const std::vector<double>& v, double u) {
            std::vector<double> out(v.size());
            for (size_t k = 0; k < v.size(); ++k)
                out[k] = (1.0 - u) * v[k] + u / static_cast<double>(v.size());
            return out;
        };
        const std::vector<double> b = mix(a, rng.next_double());
        const std::vector<double> c = mix(b, rng.next_double());
        CHECK(is_majorized(b, a, 1e-12).majorized);
        CHECK(is_majorized(c, b, 1e-12).majorized);
        CHECK(is_majorized(c, a, 1e-12).majorized);
    }
}

TEST_CASE("convolving makes a step law more majorized (order compatibility)") {
    Rng rng(12);
    for (int rep = 0; rep < 100; ++rep) {
        auto random_dist = [&](int span) {
            std::vector<int> sites;
            std::vector<double> probs;
            double mass = 0.0;
            for (int i = -span; i <= span; ++i) {
                sites.push_back(i);
                const double w = rng.next_double();
                probs.push_back(w);
                mass += w;
            }
            for (auto& w : probs) w /= mass;
            return IncrementDist::one_dim(std::move(sites), std::move(probs));
        };
        const IncrementDist p = random_dist(1 + static_cast<int>(rng.next_below(2)));
        const IncrementDist q = random_dist(1);
        CHECK(is_majorized(convolve(p, q), p, 1e-9).majorized);
    }
}

TEST_CASE("symmetric unimodality checks") {
    CHECK(is_symmetric_unimodal(IncrementDist::one_dim({-1, 0, 1},
                                                       {1.0 / 3, 1.0 / 3, 1.0 / 3})));
    CHECK(is_symmetric_unimodal(IncrementDist::one_dim({-1, 0, 1}, {0.2, 0.6, 0.2})));
    CHECK_FALSE(is_symmetric_unimodal(IncrementDist::one_dim({-1, 0, 1}, {0.6, 0.2, 0.2})));
    CHECK_FALSE(is_symmetric_unimodal(IncrementDist::one_dim({-1, 0, 1}, {0.4, 0.2, 0.4})));
    CHECK_THROWS_AS(is_symmetric_unimodal(IncrementDist::dirac_origin(2)), ConfigError);
}

TEST_CASE("heavy-tail family") {
    for (double alpha : {0.5, 1.0, 2.0}) {
        const IncrementDist p = heavy_tail_increments(alpha, 5);
        CHECK(is_symmetric_unimodal(p));
        double mass = 0.0;
        for (double w : p.probs()) mass += w;
        CHECK(std::abs(mass - 1.0) <= 1e-12);
    }
    // alpha = 64: p(+-2) underflows to zero relative to p(+-1)
    const IncrementDist steep = heavy_tail_increments(64.0, 2);
    double p1 = 0.0, p2 = 0.0;
    for (size_t k = 0; k < steep.size(); ++k) {
        if (steep.support()[k][0] == 1) p1 = steep.probs()[k];
        if (steep.support()[k][0] == 2) p2 = steep.probs()[k];
    }
    CHECK(p1 > 0.0);
    CHECK(p2 <= 1e-300);
}

TEST_CASE("ct kernel: t = 0 identity with zero bound") {
    const auto res = ct_srw_kernel({1.0, 1}, 0.0, 3, 1e-9);
    CHECK(res.error_bound == 0.0);
    const uint64_t n = res.box.size();
    for (uint64_t i = 0; i < n; ++i)
        for (uint64_t j = 0; j < n; ++j)
            CHECK(res.matrix[i * n + j] == (i == j ? 1.0 : 0.0));
}

TEST_CASE("ct kernel: symmetry and row sums within the certified bound") {
    const auto res = ct_srw_kernel({1.5, 1}, 1.0, 12, 1e-10);
    const uint64_t n = res.box.size();
    const uint64_t o = res.box.index({0});
    for (int k = 1; k <= 12; ++k)
        CHECK(res.matrix[o * n + res.box.index({k})] ==
              doctest::Approx(res.matrix[o * n + res.box.index({-k})]).epsilon(1e-12));
    for (uint64_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (uint64_t j = 0; j < n; ++j) row += res.matrix[i * n + j];
        CHECK(row <= 1.0 + 1e-12);
        if (i == o) CHECK(row >= 1.0 - res.error_bound);
    }
}

TEST_CASE("ct kernel return probability matches the independent series oracle") {
    // p_t(0,0) = e^{-kappa t} sum_n (kappa t)^n / n! * binom(n, n/2) / 2^n
    // over even n, truncated with a certified tail
    const double kappa = 1.0, t = 1.0;
    double oracle = 0.0;
    double coeff = std::exp(-kappa * t);  // (kappa t)^n/n! e^{-kappa t}
    double central = 1.0;                 // binom(n, n/2) / 2^n at even n
    int n = 0;
    for (; n <= 60; ++n) {
        if (n % 2 == 0) {
            oracle += coeff * central;
            // next even step: binom(n+2,(n+2)/2)/2^{n+2} = central*(n+1)/(n+2)
            central *= (n + 1.0) / (n + 2.0);
        }
        coeff *= kappa * t / (n + 1.0);
    }
    const double oracle_tail = poisson_tail(kappa * t, 61);

    const auto res = ct_srw_kernel({kappa, 1}, t, 10, 1e-10);
    const uint64_t nn = res.box.size();
    const double computed = res.matrix[res.box.index({0}) * nn + res.box.index({0})];
    CHECK(std::abs(computed - oracle) <= res.error_bound + oracle_tail + 1e-13);
}

TEST_CASE("ct kernel input validation") {
    CHECK_THROWS_AS(ct_srw_kernel({1.0, 1}, 1.0, 3, 0.0), ConfigError);
    CHECK_THROWS_AS(ct_srw_kernel({1.0, 1}, 1.0, 0, 1e-6), ConfigError);
    CHECK_THROWS_AS(ct_srw_kernel({-1.0, 1}, 1.0, 3, 1e-6), ConfigError);
}

TEST_CASE("ct kernel in two dimensions keeps coordinate symmetry") {
    const auto res = ct_srw_kernel({0.8, 2}, 0.7, 4, 1e-8);
    const uint64_t n = res.box.size();
    const uint64_t o = res.box.index({0, 0});
    CHECK(res.matrix[o * n + res.box.index({1, 0})] ==
          doctest::Approx(res.matrix[o * n + res.box.index({0, 1})]).epsilon(1e-12));
    CHECK(res.matrix[o * n + res.box.index({2, 1})] ==
          doctest::Approx(res.matrix[o * n + res.box.index({-1, -2})]).epsilon(1e-12));
}
