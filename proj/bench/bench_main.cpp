// Serial-vs-OpenMP benchmark for the parallel kernels. Every kernel reduces
// over fixed blocks, so the parallel result must be bit-identical to the
// serial reference; this harness times both and verifies that equality.

#include <chrono>
#include <cstdio>
#include <string>

#include "rwre/pam_ct.hpp"
#include "rwre/polymer_dt.hpp"
#include "rwre/stochorder.hpp"

using namespace rwre;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct BenchRow {
    std::string name;
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
    bool identical = false;
};

void print_row(const BenchRow& r) {
    std::printf("%-34s %10.1f ms %10.1f ms   speedup %.2fx   identical: %s\n", r.name.c_str(),
                r.serial_ms, r.parallel_ms, r.serial_ms / r.parallel_ms,
                r.identical ? "yes" : "NO");
}

template <typename F>
BenchRow bench(const std::string& name, F&& run) {
    BenchRow row;
    row.name = name;
    double t0 = now_ms();
    const double serial = run(1);
    row.serial_ms = now_ms() - t0;
    t0 = now_ms();
    const double parallel = run(0);  // 0 = all threads
    row.parallel_ms = now_ms() - t0;
    row.identical = serial == parallel;
    return row;
}

}  // namespace

int main(int argc, char** argv) {
    const int scale = argc > 1 ? std::max(1, std::atoi(argv[1])) : 1;
    std::printf("%-34s %13s %13s\n", "kernel", "serial", "openmp");

    {
        const EnvSpec spec({{-1.0, 0.3}, {0.5, 0.7}});
        const IncrementDist p1 = IncrementDist::one_dim({-1, 0, 1}, {0.25, 0.5, 0.25});
        const IncrementDist q = IncrementDist::one_dim({0, 1}, {0.5, 0.5});
        print_row(bench("coupling-defect enumeration", [&](int threads) {
            return coupling_identity_check(spec, p1, q, 3, 100000000ULL, 1e-12, threads)
                .max_defect;
        }));
    }
    {
        const EnvSpec spec({{-1.0, 0.25}, {0.5, 0.75}});
        const IncrementDist p1 = IncrementDist::one_dim({-1, 0, 1}, {0.25, 0.5, 0.25});
        const IncrementDist p2 =
            convolve(p1, IncrementDist::one_dim({0, 1}, {0.5, 0.5}));
        print_row(bench("joint-law enumeration", [&](int threads) {
            return joint_partition_distribution(spec, p1, p2, 3, 100000000ULL, threads).mean1();
        }));
    }
    {
        const MarkLaw disasters({{-1.0, 1.0}});
        const uint64_t n = 20000ULL * static_cast<uint64_t>(scale);
        print_row(bench("lyapunov environment batch", [&](int threads) {
            const CtEnvSamples s =
                ct_env_partition_samples(1.0, disasters, {0.5, 2.0}, 2.0, n, 4242, 1e-7, 1,
                                         threads);
            return lyapunov_quenched_from_samples(s.z[1], 2.0).estimate;
        }));
    }
    {
        const MarkLaw disasters({{-1.0, 1.0}});
        const MarkSet marks = sample_mark_set(1.0, disasters, 1.0, 14, 1, 99);
        const uint64_t n = 400000ULL * static_cast<uint64_t>(scale);
        print_row(bench("path monte carlo", [&](int threads) {
            return ct_partition_mc(marks, 1.0, 1.0, n, 31, threads).mean;
        }));
    }
    return 0;
}
