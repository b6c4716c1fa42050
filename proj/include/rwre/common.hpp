#pragma once

// Shared plumbing: error classes, seeded RNG with counter-addressed
// substreams, compensated summation, and a deterministic block-parallel
// reduction scheme (results do not depend on the thread count).

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rwre {

// ---------------------------------------------------------------------------
// Errors. The CLI maps these to distinct exit codes.

/// Invalid parameters, malformed specs, malformed configs.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A requested computation exceeds a declared resource cap.
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A lookup left the stored window of a field.
struct WindowError : std::runtime_error {
    explicit WindowError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// RNG. xoshiro256++ seeded through SplitMix64. Substream k of a master seed
// is obtained by seeding with splitmix(master ^ GOLDEN*(k+1)); the mapping
// replica-index -> stream never depends on the thread count.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t s = seed;
        for (auto& w : state_) {
            s = splitmix64(s);
            w = s;
        }
        // avoid the all-zero state (splitmix cannot produce four zeros from
        // any seed in practice, but cheap to guard)
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in (0,1); never returns 0 or 1 exactly.
    double next_double() {
        double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        if (u <= 0.0) u = 0x1.0p-53;
        return u;
    }

    /// Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) {
        // multiply-shift; bias is negligible for n << 2^64 and irrelevant for
        // the statistical tolerances used here
        return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    double exponential(double rate) { return -std::log(next_double()) / rate; }

    /// Poisson sample via Knuth's product method, chunked so that large means
    /// stay exact in law without underflow.
    uint64_t poisson(double mean) {
        uint64_t total = 0;
        while (mean > 16.0) {
            total += poisson_small(16.0);
            mean -= 16.0;
        }
        return total + poisson_small(mean);
    }

    /// Index sample from a cumulative-free probability vector.
    size_t discrete(const std::vector<double>& probs) {
        double u = next_double();
        double acc = 0.0;
        for (size_t i = 0; i + 1 < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.empty() ? 0 : probs.size() - 1;
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        uint64_t k = 0;
        double prod = next_double();
        while (prod > limit) {
            ++k;
            prod *= next_double();
        }
        return k;
    }

    uint64_t state_[4];
};

/// Deterministic substream seed: replica `stream` of `master`.
inline uint64_t substream_seed(uint64_t master, uint64_t stream) {
    return splitmix64(master ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

inline Rng substream(uint64_t master, uint64_t stream) {
    return Rng(substream_seed(master, stream));
}

// ---------------------------------------------------------------------------
// Compensated (Neumaier) summation, used by the exact-enumeration reducers so
// accumulated rounding stays at ulp scale even over 1e7 terms.

class NeumaierSum {
  public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    void merge(const NeumaierSum& other) {
        add(other.sum_);
        comp_ += other.comp_;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// Deterministic block-parallel reduction. The index range is split into
// fixed-size blocks independent of the thread count; block partials are
// combined serially in block order, so the result is bit-identical for any
// number of threads (including the serial reference path).

inline int resolve_threads(int requested) {
#ifdef _OPENMP
    if (requested > 0) return requested;
    return omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

/// Runs `body(block_index, begin, end)` over fixed blocks of `block_size`.
/// With threads == 1 this is the serial reference path.
inline void for_each_block(uint64_t n, uint64_t block_size, int threads,
                           const std::function<void(uint64_t, uint64_t, uint64_t)>& body) {
    if (n == 0) return;
    if (block_size == 0) block_size = 1;
    const uint64_t n_blocks = (n + block_size - 1) / block_size;
    const int nt = resolve_threads(threads);
    if (nt <= 1 || n_blocks == 1) {
        for (uint64_t b = 0; b < n_blocks; ++b)
            body(b, b * block_size, std::min(n, (b + 1) * block_size));
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
    for (long long b = 0; b < static_cast<long long>(n_blocks); ++b) {
        const uint64_t ub = static_cast<uint64_t>(b);
        body(ub, ub * block_size, std::min(n, (ub + 1) * block_size));
    }
#else
    for (uint64_t b = 0; b < n_blocks; ++b)
        body(b, b * block_size, std::min(n, (b + 1) * block_size));
#endif
}

/// Deterministic parallel sum of f(i) over i in [0, n).
inline double block_sum(uint64_t n, int threads, const std::function<double(uint64_t)>& f,
                        uint64_t block_size = 4096) {
    const uint64_t n_blocks = n == 0 ? 0 : (n + block_size - 1) / block_size;
    std::vector<NeumaierSum> partial(n_blocks);
    for_each_block(n, block_size, threads, [&](uint64_t b, uint64_t lo, uint64_t hi) {
        NeumaierSum s;
        for (uint64_t i = lo; i < hi; ++i) s.add(f(i));
        partial[b] = s;
    });
    NeumaierSum total;
    for (const auto& p : partial) total.merge(p);
    return total.value();
}

/// Deterministic parallel max of f(i) over i in [0, n); -inf on empty range.
inline double block_max(uint64_t n, int threads, const std::function<double(uint64_t)>& f,
                        uint64_t block_size = 4096) {
    const uint64_t n_blocks = n == 0 ? 0 : (n + block_size - 1) / block_size;
    std::vector<double> partial(n_blocks, -std::numeric_limits<double>::infinity());
    for_each_block(n, block_size, threads, [&](uint64_t b, uint64_t lo, uint64_t hi) {
        double m = -std::numeric_limits<double>::infinity();
        for (uint64_t i = lo; i < hi; ++i) m = std::max(m, f(i));
        partial[b] = m;
    });
    double total = -std::numeric_limits<double>::infinity();
    for (double p : partial) total = std::max(total, p);
    return total;
}

// ---------------------------------------------------------------------------
// Mean / standard-error accumulator for Monte Carlo outputs.

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
    uint64_t n = 0;
};

inline MeanSE mean_se(const std::vector<double>& xs) {
    MeanSE out;
    out.n = xs.size();
    if (xs.empty()) return out;
    NeumaierSum s;
    for (double x : xs) s.add(x);
    out.mean = s.value() / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        NeumaierSum q;
        for (double x : xs) q.add((x - out.mean) * (x - out.mean));
        out.se = std::sqrt(q.value() / (static_cast<double>(xs.size()) *
                                        static_cast<double>(xs.size() - 1)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Poisson tail P(N >= k) for N ~ Poisson(mean). Used by the uniformization
// error bounds; mean stays modest (<= a few hundred) in all callers.

inline double poisson_tail(double mean, uint64_t k) {
    if (mean <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (k == 0) return 1.0;
    const double logmean = std::log(mean);
    const auto log_pmf = [&](double n) { return -mean + n * logmean - std::lgamma(n + 1.0); };
    if (static_cast<double>(k) <= mean) {
        // complement of the lower sum; per-term logs avoid underflow at
        // large means (a vanishing lower sum correctly gives tail ~ 1)
        double cdf = 0.0;
        for (uint64_t n = 0; n < k; ++n) cdf += std::exp(log_pmf(static_cast<double>(n)));
        return std::min(std::max(1.0 - cdf, 0.0), 1.0);
    }
    // above the mean the terms decrease; direct positive sum, no cancellation
    double term = std::exp(log_pmf(static_cast<double>(k)));
    double acc = 0.0;
    for (uint64_t n = k;; ++n) {
        acc += term;
        term *= mean / static_cast<double>(n + 1);
        if (term <= acc * 1e-18 + 1e-320) break;
    }
    return std::min(acc, 1.0);
}

}  // namespace rwre
