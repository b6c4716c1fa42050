#pragma once

// Finite distributions on the real line (exact laws produced by the
// enumeration oracles) and joint laws of partition-function pairs driven by
// a common environment.

#include <cstdint>
#include <vector>

#include "rwre/common.hpp"

namespace rwre {

/// Finite law with non-negative values; atoms are kept sorted ascending and
/// merged when closer than merge_tol.
class FiniteDist {
  public:
    FiniteDist() = default;
    FiniteDist(std::vector<double> values, std::vector<double> probs,
               double merge_tol = 1e-12);

    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& probs() const { return probs_; }
    size_t size() const { return values_.size(); }

    double mean() const;

    /// E[min(X, a)] via the sorted prefix sums; O(log n).
    double expected_min(double a) const;

    double total_mass() const;

  private:
    std::vector<double> values_;
    std::vector<double> probs_;
    std::vector<double> prefix_mass_;   // cumulative probs
    std::vector<double> prefix_first_;  // cumulative probs*values
};

/// Joint law of a pair (Z1, Z2); exact duplicates are merged.
class JointDist {
  public:
    void add(double z1, double z2, double prob);
    void finalize();  // sort + merge exact duplicates

    const std::vector<double>& z1() const { return z1_; }
    const std::vector<double>& z2() const { return z2_; }
    const std::vector<double>& probs() const { return probs_; }
    size_t size() const { return z1_.size(); }

    double mean1() const;
    double mean2() const;
    FiniteDist marginal1(double merge_tol = 1e-12) const;
    FiniteDist marginal2(double merge_tol = 1e-12) const;

    /// E[f(Z_component)] for f = min(., a).
    double expected_min(int component, double a) const;

  private:
    std::vector<double> z1_, z2_, probs_;
    bool finalized_ = false;
};

}  // namespace rwre
