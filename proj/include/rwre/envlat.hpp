#pragma once

// Environment models: single-site laws, realized lattice fields on finite
// space-time windows, continuous-time mark sets, K-ary tree environments and
// offspring fields, together with samplers, exhaustive enumerators and the
// shift actions.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rwre/common.hpp"
#include "rwre/geometry.hpp"

namespace rwre {

// ---------------------------------------------------------------------------
// Single-site environment law: finite atoms (value, prob) with value >= -1.

struct EnvAtom {
    double value;
    double prob;
};

class EnvSpec {
  public:
    explicit EnvSpec(std::vector<EnvAtom> atoms);

    const std::vector<EnvAtom>& atoms() const { return atoms_; }
    size_t atom_count() const { return atoms_.size(); }

    /// E[1 + omega] for a single cell.
    double mean_factor() const { return mean_factor_; }

    double sample_value(Rng& rng) const;
    size_t sample_index(Rng& rng) const;

    bool has_hard_obstacles() const;

    static EnvSpec bernoulli_obstacle(double q_obstacle) {
        return EnvSpec({{-1.0, q_obstacle}, {0.0, 1.0 - q_obstacle}});
    }
    static EnvSpec constant(double value) { return EnvSpec({{value, 1.0}}); }

  private:
    std::vector<EnvAtom> atoms_;
    std::vector<double> probs_;  // parallel to atoms_, for sampling
    double mean_factor_;
};

/// Finite mark law on [-1, inf); same validated shape as EnvSpec.
using MarkLaw = EnvSpec;

// ---------------------------------------------------------------------------
// Lattice field: values on a per-time-slice window, horizon t (slices 1..t).

struct LatticeWindow {
    std::vector<Box> slices;  // slices[s-1] is the window of time s

    int horizon() const { return static_cast<int>(slices.size()); }
    uint64_t cell_count() const {
        uint64_t n = 0;
        for (const auto& b : slices) n += b.size();
        return n;
    }
};

/// Windows covering the box hull of the reachable set of a walk with the
/// given steps, for s = 1..t.
LatticeWindow reach_window(const std::vector<Site>& steps, int t);

/// Slice-wise hull of two windows of equal horizon.
LatticeWindow union_window(const LatticeWindow& a, const LatticeWindow& b);

class LatticeField {
  public:
    LatticeField(int horizon, LatticeWindow window, double default_value = 0.0);

    int horizon() const { return horizon_; }
    const LatticeWindow& window() const { return window_; }
    double default_value() const { return default_value_; }

    bool in_window(int s, const Site& i) const;

    /// Strict lookup; throws WindowError outside the window.
    double at(int s, const Site& i) const;

    /// Lenient lookup falling back to the default value.
    double at_or_default(int s, const Site& i) const;

    void set(int s, const Site& i, double value);

    std::vector<double>& slice_values(int s) { return values_[static_cast<size_t>(s - 1)]; }
    const std::vector<double>& slice_values(int s) const {
        return values_[static_cast<size_t>(s - 1)];
    }

  private:
    int horizon_;
    LatticeWindow window_;
    std::vector<std::vector<double>> values_;  // one flat array per slice
    double default_value_;
};

/// I.i.d. draws per cell; deterministic given the seed.
LatticeField sample_lattice_field(const EnvSpec& spec, int horizon, const LatticeWindow& window,
                                  uint64_t seed);

/// Number of configurations of the exhaustive enumeration (atoms^cells);
/// throws ResourceError beyond the cap.
uint64_t enumeration_size(const EnvSpec& spec, const LatticeWindow& window, uint64_t cap);

/// Decodes configuration `index` (mixed-radix over cells) into a field.
LatticeField decode_lattice_config(const EnvSpec& spec, int horizon, const LatticeWindow& window,
                                   uint64_t index, double* prob_out);

/// Same decode into a preexisting field (windows must match); the
/// enumeration kernels reuse one field per block to stay allocation-free.
void decode_lattice_config_into(const EnvSpec& spec, uint64_t index, LatticeField& field,
                                double* prob_out);

/// Emits every configuration exactly once with its probability.
void enumerate_lattice_fields(const EnvSpec& spec, int horizon, const LatticeWindow& window,
                              uint64_t cap,
                              const std::function<void(const LatticeField&, double)>& fn);

/// Shift action along a path: (theta^x omega)(s, i) = omega(s, i + x_s).
/// The output window is the input window translated slice-wise by -x_s;
/// lookups that would leave the stored window throw at evaluation time.
LatticeField shift_lattice(const LatticeField& field, const LatticePath& x);

// ---------------------------------------------------------------------------
// Continuous-time mark sets: finitely many (time, site, mark) triples on
// [0, horizon] x box, plus the generating intensity.

struct MarkPoint {
    double time;
    Site site;
    double value;  // mark r in [-1, inf)
};

class MarkSet {
  public:
    MarkSet(double horizon, int dim, int box_radius, std::vector<MarkPoint> marks,
            double rate = 0.0, std::optional<MarkLaw> law = std::nullopt);

    double horizon() const { return horizon_; }
    int dim() const { return dim_; }
    int box_radius() const { return box_radius_; }
    double rate() const { return rate_; }
    const std::optional<MarkLaw>& law() const { return law_; }

    /// Marks sorted by time (strictly increasing).
    const std::vector<MarkPoint>& marks() const { return marks_; }

    /// Product of (1 + r) over marks with r > 0; upper bound for the weight
    /// any single path can collect.
    double bonus_weight_bound() const;

    /// Marks mapped through s -> horizon - s (Feynman-Kac time reversal).
    MarkSet time_reversed() const;

  private:
    double horizon_;
    int dim_;
    int box_radius_;
    std::vector<MarkPoint> marks_;
    double rate_;
    std::optional<MarkLaw> law_;
};

/// Per-site Poisson(rate) mark times on [0, horizon], marks i.i.d. from rho.
MarkSet sample_mark_set(double rate, const MarkLaw& rho, double horizon, int box_radius, int dim,
                        uint64_t seed);

// ---------------------------------------------------------------------------
// K-ary tree environments. Nodes at depth l are indexed 0..K^l-1; the node
// with index n at depth l has children at depth l+1 with indices n*K + a,
// a = 0..K-1. Index order is the lexicographic order of child-index paths.

struct TreeNodeId {
    int depth = 0;
    uint64_t index = 0;

    bool operator==(const TreeNodeId& o) const { return depth == o.depth && index == o.index; }
    bool operator<(const TreeNodeId& o) const {
        if (depth != o.depth) return depth < o.depth;
        return index < o.index;
    }
};

inline TreeNodeId tree_child(const TreeNodeId& v, int arity, int child) {
    return TreeNodeId{v.depth + 1, v.index * static_cast<uint64_t>(arity) +
                                       static_cast<uint64_t>(child)};
}

inline uint64_t tree_level_size(int arity, int depth) {
    uint64_t n = 1;
    for (int l = 0; l < depth; ++l) n *= static_cast<uint64_t>(arity);
    return n;
}

class TreeEnv {
  public:
    TreeEnv(int arity, int depth);

    int arity() const { return arity_; }
    int depth() const { return depth_; }

    double at(const TreeNodeId& v) const;
    void set(const TreeNodeId& v, double value);

    std::vector<double>& level_values(int depth) { return values_[static_cast<size_t>(depth - 1)]; }
    const std::vector<double>& level_values(int depth) const {
        return values_[static_cast<size_t>(depth - 1)];
    }

    uint64_t cell_count() const;

  private:
    int arity_;
    int depth_;
    std::vector<std::vector<double>> values_;  // levels 1..depth
};

TreeEnv sample_tree_env(const EnvSpec& spec, int arity, int depth, uint64_t seed);

uint64_t tree_enumeration_size(const EnvSpec& spec, int arity, int depth, uint64_t cap);

TreeEnv decode_tree_config(const EnvSpec& spec, int arity, int depth, uint64_t index,
                           double* prob_out);

/// Elementary shift at node v: permutes the subtrees attached to v by perm
/// (output(w) = env(theta(w)) with theta((v,a,w')) = (v, perm[a], w')).
/// perm is 0-based over {0..K-1}.
TreeEnv apply_elementary_shift(const TreeEnv& env, const TreeNodeId& v,
                               const std::vector<int>& perm);

// ---------------------------------------------------------------------------
// Offspring laws for branching walks: atoms are whole offspring laws on
// {0,1,...}; the induced environment value is (mean offspring - 1).

struct OffspringAtom {
    std::vector<double> law;  // law[k] = P(k descendants)
    double prob;
};

class OffspringSpec {
  public:
    explicit OffspringSpec(std::vector<OffspringAtom> atoms);

    const std::vector<OffspringAtom>& atoms() const { return atoms_; }
    double atom_mean(size_t idx) const { return means_[idx]; }

    /// Single-site law of omega = mean offspring - 1.
    EnvSpec induced_env_spec() const;

    size_t sample_index(Rng& rng) const;

  private:
    std::vector<OffspringAtom> atoms_;
    std::vector<double> means_;
};

/// Realized offspring field: one atom index per cell over a window.
class OffspringField {
  public:
    OffspringField(const OffspringSpec& spec, int horizon, LatticeWindow window, uint64_t seed);

    const OffspringSpec& spec() const { return *spec_; }
    int horizon() const { return horizon_; }
    const LatticeWindow& window() const { return window_; }

    size_t atom_at(int s, const Site& i) const;

    /// The induced lattice field omega(eta), for the polymer DP.
    LatticeField induced_field() const;

  private:
    const OffspringSpec* spec_;
    int horizon_;
    LatticeWindow window_;
    std::vector<std::vector<uint32_t>> atom_idx_;
};

}  // namespace rwre
