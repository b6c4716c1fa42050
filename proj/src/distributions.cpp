#include "rwre/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rwre {

FiniteDist::FiniteDist(std::vector<double> values, std::vector<double> probs, double merge_tol) {
    if (values.size() != probs.size()) throw ConfigError("finite dist values/probs mismatch");
    std::vector<size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    for (size_t k : order) {
        const double v = values[k];
        const double w = probs[k];
        if (w < 0.0) throw ConfigError("negative probability in finite dist");
        if (!values_.empty() && v - values_.back() <= merge_tol * std::max(1.0, std::abs(v))) {
            probs_.back() += w;
        } else {
            values_.push_back(v);
            probs_.push_back(w);
        }
    }
    prefix_mass_.resize(values_.size());
    prefix_first_.resize(values_.size());
    NeumaierSum mass, first;
    for (size_t k = 0; k < values_.size(); ++k) {
        mass.add(probs_[k]);
        first.add(probs_[k] * values_[k]);
        prefix_mass_[k] = mass.value();
        prefix_first_[k] = first.value();
    }
}

double FiniteDist::mean() const { return values_.empty() ? 0.0 : prefix_first_.back(); }

double FiniteDist::total_mass() const { return values_.empty() ? 0.0 : prefix_mass_.back(); }

double FiniteDist::expected_min(double a) const {
    if (values_.empty()) return 0.0;
    // last index with value <= a
    const auto it = std::upper_bound(values_.begin(), values_.end(), a);
    if (it == values_.begin()) return a * total_mass();
    const size_t k = static_cast<size_t>(it - values_.begin()) - 1;
    return prefix_first_[k] + a * (total_mass() - prefix_mass_[k]);
}

void JointDist::add(double z1, double z2, double prob) {
    z1_.push_back(z1);
    z2_.push_back(z2);
    probs_.push_back(prob);
    finalized_ = false;
}

void JointDist::finalize() {
    std::vector<size_t> order(z1_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (z1_[a] != z1_[b]) return z1_[a] < z1_[b];
        return z2_[a] < z2_[b];
    });
    std::vector<double> a, b, w;
    a.reserve(order.size());
    for (size_t k : order) {
        if (!a.empty() && a.back() == z1_[k] && b.back() == z2_[k]) {
            w.back() += probs_[k];
        } else {
            a.push_back(z1_[k]);
            b.push_back(z2_[k]);
            w.push_back(probs_[k]);
        }
    }
    z1_ = std::move(a);
    z2_ = std::move(b);
    probs_ = std::move(w);
    finalized_ = true;
}

double JointDist::mean1() const {
    NeumaierSum s;
    for (size_t k = 0; k < z1_.size(); ++k) s.add(z1_[k] * probs_[k]);
    return s.value();
}

double JointDist::mean2() const {
    NeumaierSum s;
    for (size_t k = 0; k < z2_.size(); ++k) s.add(z2_[k] * probs_[k]);
    return s.value();
}

FiniteDist JointDist::marginal1(double merge_tol) const {
    return FiniteDist(z1_, probs_, merge_tol);
}

FiniteDist JointDist::marginal2(double merge_tol) const {
    return FiniteDist(z2_, probs_, merge_tol);
}

double JointDist::expected_min(int component, double a) const {
    const std::vector<double>& z = component == 1 ? z1_ : z2_;
    NeumaierSum s;
    for (size_t k = 0; k < z.size(); ++k) s.add(std::min(z[k], a) * probs_[k]);
    return s.value();
}

}  // namespace rwre
