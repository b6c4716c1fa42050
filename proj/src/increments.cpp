#include "rwre/increments.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace rwre {

namespace {
constexpr double kMassTol = 1e-12;
}

// ---------------------------------------------------------------------------
// IncrementDist

IncrementDist::IncrementDist(int dim, std::vector<Site> support, std::vector<double> probs)
    : dim_(dim), support_(std::move(support)), probs_(std::move(probs)) {
    if (dim_ < 1) throw ConfigError("increment dimension must be >= 1");
    if (support_.empty()) throw ConfigError("empty increment support");
    if (support_.size() != probs_.size()) throw ConfigError("support/probs length mismatch");
    double mass = 0.0;
    std::map<Site, int> seen;
    for (size_t k = 0; k < support_.size(); ++k) {
        if (static_cast<int>(support_[k].size()) != dim_)
            throw ConfigError("support site dimension mismatch");
        if (probs_[k] < 0.0) throw ConfigError("negative increment probability");
        if (++seen[support_[k]] > 1) throw ConfigError("duplicate support site");
        mass += probs_[k];
    }
    if (std::abs(mass - 1.0) > kMassTol)
        throw ConfigError("increment probabilities sum to " + std::to_string(mass));
}

size_t IncrementDist::sample_index(Rng& rng) const { return rng.discrete(probs_); }

IncrementDist IncrementDist::one_dim(std::vector<int> sites, std::vector<double> probs) {
    std::vector<Site> support;
    support.reserve(sites.size());
    for (int s : sites) support.push_back(Site{s});
    return IncrementDist(1, std::move(support), std::move(probs));
}

IncrementDist convolve(const IncrementDist& p, const IncrementDist& q) {
    if (p.dim() != q.dim()) throw ConfigError("convolution dimension mismatch");
    std::map<Site, double> acc;
    for (size_t i = 0; i < p.size(); ++i)
        for (size_t j = 0; j < q.size(); ++j)
            acc[add_sites(p.support()[i], q.support()[j])] += p.probs()[i] * q.probs()[j];
    std::vector<Site> support;
    std::vector<double> probs;
    for (auto& [site, prob] : acc) {
        support.push_back(site);
        probs.push_back(prob);
    }
    // renormalize the ulp-level rounding so the invariant holds exactly
    double mass = 0.0;
    for (double w : probs) mass += w;
    for (double& w : probs) w /= mass;
    return IncrementDist(p.dim(), std::move(support), std::move(probs));
}

IncrementDist convolve_power(const IncrementDist& p, int n) {
    if (n < 1) throw ConfigError("convolution power must be >= 1");
    IncrementDist out = p;
    for (int k = 1; k < n; ++k) out = convolve(out, p);
    return out;
}

// ---------------------------------------------------------------------------
// Majorization

MajorizationCertificate is_majorized(std::span<const double> p, std::span<const double> q,
                                     double tol) {
    MajorizationCertificate cert;
    const size_t n = std::max(p.size(), q.size());
    std::vector<double> ps(n, 0.0), qs(n, 0.0);
    std::copy(p.begin(), p.end(), ps.begin());
    std::copy(q.begin(), q.end(), qs.begin());
    std::sort(ps.begin(), ps.end(), std::greater<double>());
    std::sort(qs.begin(), qs.end(), std::greater<double>());
    double pk = 0.0, qk = 0.0;
    cert.majorized = true;
    cert.partial_sum_gaps.reserve(n);
    for (size_t k = 0; k < n; ++k) {
        pk += ps[k];
        qk += qs[k];
        const double gap = qk - pk;
        cert.partial_sum_gaps.push_back(gap);
        if (gap < -tol && cert.majorized) {
            cert.majorized = false;
            cert.failing_index = k;
        }
    }
    if (n > 0 && std::abs(pk - qk) > tol) {
        cert.mass_mismatch = true;
        cert.majorized = false;
        if (!cert.failing_index) cert.failing_index = n - 1;
    }
    return cert;
}

MajorizationCertificate is_majorized(const IncrementDist& p, const IncrementDist& q, double tol) {
    // pad to the union support; only the multisets of masses matter
    std::map<Site, std::pair<double, double>> merged;
    for (size_t k = 0; k < p.size(); ++k) merged[p.support()[k]].first = p.probs()[k];
    for (size_t k = 0; k < q.size(); ++k) merged[q.support()[k]].second = q.probs()[k];
    std::vector<double> pv, qv;
    for (auto& [site, masses] : merged) {
        pv.push_back(masses.first);
        qv.push_back(masses.second);
    }
    return is_majorized(std::span<const double>(pv), std::span<const double>(qv), tol);
}

bool is_symmetric_unimodal(const IncrementDist& p, double tol) {
    if (p.dim() != 1) throw ConfigError("unimodality check is one-dimensional");
    std::map<int, double> mass;
    for (size_t k = 0; k < p.size(); ++k) mass[p.support()[k][0]] = p.probs()[k];
    int K = 0;
    for (const auto& [i, w] : mass) K = std::max(K, std::abs(i));
    auto at = [&](int i) {
        auto it = mass.find(i);
        return it == mass.end() ? 0.0 : it->second;
    };
    for (int i = 1; i <= K; ++i)
        if (std::abs(at(i) - at(-i)) > tol) return false;
    for (int i = 0; i < K; ++i)
        if (at(i + 1) > at(i) + tol) return false;
    return true;
}

IncrementDist heavy_tail_increments(double alpha, int K) {
    if (alpha <= 0.0) throw ConfigError("heavy-tail exponent must be positive");
    if (K < 1) throw ConfigError("heavy-tail cutoff must be >= 1");
    std::vector<int> sites;
    std::vector<double> probs;
    double mass = 0.0;
    for (int i = -K; i <= K; ++i) {
        sites.push_back(i);
        const double w = std::exp(-std::pow(std::abs(static_cast<double>(i)), alpha));
        probs.push_back(w);
        mass += w;
    }
    for (double& w : probs) w /= mass;
    return IncrementDist::one_dim(std::move(sites), std::move(probs));
}

// ---------------------------------------------------------------------------
// Uniformized continuous-time SRW kernel

void apply_srw_stencil(const Box& box, const std::vector<double>& in, std::vector<double>& out) {
    const int d = box.dim();
    const double w = 1.0 / (2.0 * static_cast<double>(d));
    std::fill(out.begin(), out.end(), 0.0);
    // strides of each coordinate in the row-major flat index
    std::vector<uint64_t> stride(static_cast<size_t>(d), 1);
    for (int k = d - 2; k >= 0; --k)
        stride[static_cast<size_t>(k)] =
            stride[static_cast<size_t>(k + 1)] *
            static_cast<uint64_t>(box.hi[static_cast<size_t>(k + 1)] -
                                  box.lo[static_cast<size_t>(k + 1)] + 1);
    Site s = box.lo;
    const uint64_t n = box.size();
    for (uint64_t idx = 0; idx < n; ++idx) {
        const double m = in[idx];
        if (m != 0.0) {
            for (int k = 0; k < d; ++k) {
                if (s[static_cast<size_t>(k)] > box.lo[static_cast<size_t>(k)])
                    out[idx - stride[static_cast<size_t>(k)]] += m * w;
                if (s[static_cast<size_t>(k)] < box.hi[static_cast<size_t>(k)])
                    out[idx + stride[static_cast<size_t>(k)]] += m * w;
            }
        }
        // advance the site counter (last coordinate fastest)
        for (int k = d - 1; k >= 0; --k) {
            if (++s[static_cast<size_t>(k)] <= box.hi[static_cast<size_t>(k)]) break;
            s[static_cast<size_t>(k)] = box.lo[static_cast<size_t>(k)];
        }
    }
}

double evolve_uniformized(const Box& box, std::vector<double>& u, double kappa, double dt,
                          int terms) {
    const double mean = kappa * dt;
    if (mean <= 0.0) return 0.0;
    std::vector<double> term = u;
    std::vector<double> next(u.size());
    double coeff = std::exp(-mean);  // e^{-m} m^n / n! at n = 0
    std::vector<double> acc(u.size());
    for (size_t i = 0; i < u.size(); ++i) acc[i] = coeff * u[i];
    for (int n = 1; n <= terms; ++n) {
        apply_srw_stencil(box, term, next);
        term.swap(next);
        coeff *= mean / static_cast<double>(n);
        for (size_t i = 0; i < u.size(); ++i) acc[i] += coeff * term[i];
    }
    u.swap(acc);
    return poisson_tail(mean, static_cast<uint64_t>(terms) + 1);
}

int uniformization_terms(double mean, double target, int cap) {
    if (mean <= 0.0) return 0;
    if (poisson_tail(mean, static_cast<uint64_t>(cap) + 1) > target)
        throw ResourceError("uniformization series needs more than " + std::to_string(cap) +
                            " terms for tail target " + std::to_string(target));
    // tail is monotone decreasing in the term count
    int lo = 0, hi = cap;
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (poisson_tail(mean, static_cast<uint64_t>(mid) + 1) <= target)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

int certified_radius(double kappa, double t, double target, int cap) {
    const double mean = kappa * t;
    if (mean <= 0.0) return 0;
    if (poisson_tail(mean, static_cast<uint64_t>(cap) + 1) > target)
        throw ResourceError("certified box radius exceeds cap " + std::to_string(cap) +
                            " for tail target " + std::to_string(target));
    int lo = 1, hi = cap;
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (poisson_tail(mean, static_cast<uint64_t>(mid) + 1) <= target)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

CtKernelResult ct_srw_kernel(const CTWalkParams& params, double t, int radius, double eps) {
    if (eps <= 0.0) throw ConfigError("kernel tolerance must be positive");
    if (radius < 1) throw ConfigError("kernel radius must be >= 1");
    if (params.kappa < 0.0) throw ConfigError("jump rate must be >= 0");
    if (t < 0.0) throw ConfigError("time must be >= 0");
    CtKernelResult res;
    res.box = Box::centered(params.dim, radius);
    const uint64_t n = res.box.size();
    res.matrix.assign(n * n, 0.0);
    const double mean = params.kappa * t;
    if (mean <= 0.0) {
        for (uint64_t i = 0; i < n; ++i) res.matrix[i * n + i] = 1.0;
        res.error_bound = 0.0;
        res.series_terms = 0;
        return res;
    }
    res.series_terms = uniformization_terms(mean, eps / 2.0);
    double tail = 0.0;
    std::vector<double> row(n);
    for (uint64_t i = 0; i < n; ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        row[i] = 1.0;
        tail = evolve_uniformized(res.box, row, params.kappa, t, res.series_terms);
        std::copy(row.begin(), row.end(), res.matrix.begin() + static_cast<long>(i * n));
    }
    res.error_bound = tail + poisson_tail(mean, static_cast<uint64_t>(radius));
    return res;
}

}  // namespace rwre
