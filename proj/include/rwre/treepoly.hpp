#pragma once

// K-ary tree polymer: partition functions for homogeneous and
// node-inhomogeneous walks, both directions of the majorization criterion,
// and the interpolation / permutation-averaging ladder as executable checks.

#include <cstdint>
#include <map>
#include <vector>

#include "rwre/distributions.hpp"
#include "rwre/envlat.hpp"
#include "rwre/increments.hpp"
#include "rwre/polymer_dt.hpp"
#include "rwre/stochorder.hpp"

namespace rwre {

struct TreeIncrementDist {
    int arity = 0;
    std::vector<double> probs;  // over children 0..K-1

    TreeIncrementDist() = default;
    TreeIncrementDist(int K, std::vector<double> p);

    static TreeIncrementDist uniform(int K);
    static TreeIncrementDist dirac(int K, int child);
};

/// Walk with a default step law and per-node overrides.
class InhomogWalk {
  public:
    InhomogWalk(int arity, TreeIncrementDist default_law)
        : arity_(arity), default_law_(std::move(default_law)) {
        if (default_law_.arity != arity_) throw ConfigError("walk arity mismatch");
    }

    int arity() const { return arity_; }
    void set_override(const TreeNodeId& v, TreeIncrementDist law);
    const TreeIncrementDist& law_at(const TreeNodeId& v) const;
    const std::map<TreeNodeId, TreeIncrementDist>& overrides() const { return overrides_; }

  private:
    int arity_;
    TreeIncrementDist default_law_;
    std::map<TreeNodeId, TreeIncrementDist> overrides_;
};

/// Z_t = sum over depth-t nodes of (prefix environment weights) x (step
/// probabilities); single root-to-leaves pass.
PartitionResult tree_partition_function(const TreeEnv& env, const InhomogWalk& walk, int t);

PartitionResult tree_partition_function(const TreeEnv& env, const TreeIncrementDist& law, int t);

/// Nodes of depth <= t, heights decreasing, ties in lexicographic (index)
/// order; the enumeration the interpolation ladder walks through.
std::vector<TreeNodeId> canonical_node_order(int arity, int t);

/// Depth-1 environment open only at child r (0-based): value 0 at child r,
/// -1 at the other children.
TreeEnv necessity_env(int r, int K);

/// Mixture test over the necessity environments: exact concave comparison
/// of the laws of Z^q and Z^p under a uniform choice of the open child.
/// Returns true iff p is majorized by q (cross-checked against is_majorized).
bool necessity_check(const TreeIncrementDist& p, const TreeIncrementDist& q, double tol);

/// Detailed variant exposing the mixture laws and the order report.
struct NecessityReport {
    ConcaveOrderReport order;  // Z^q vs Z^p mixture comparison
    FiniteDist law_p, law_q;
};
NecessityReport necessity_report(const TreeIncrementDist& p, const TreeIncrementDist& q,
                                 double tol);

/// Sufficiency direction: requires p majorized by q (throws otherwise),
/// enumerates every environment of the i.i.d. spec up to depth t, builds the
/// exact joint law of (Z^p_t, Z^q_t) and tests Z^q <=_cv Z^p.
ConcaveOrderReport tree_theorem_sufficiency_check(const TreeIncrementDist& p,
                                                  const TreeIncrementDist& q, const EnvSpec& spec,
                                                  int t, uint64_t cap, double tol,
                                                  int threads = 0);

struct InterpolationReport {
    bool decomposition_ok = false;    // W_i and W_{i+1} match A + b * mixtures
    bool shift_identity_ok = false;   // what-the-shift-does identity per permutation
    bool column_closure_ok = false;   // permuted columns of M stay columns of M
    bool averaging_ok = false;        // permutation-averaged concave inequality
    bool prefix_blocked = false;      // b = 0: both sides collapse to A
    double max_defect = 0.0;
    double w_i = 0.0, w_ip1 = 0.0;

    bool all_ok() const {
        return decomposition_ok && shift_identity_ok && column_closure_ok && averaging_ok;
    }
};

/// One rung of the ladder that transforms the q-walk into the p-walk at
/// horizon t+1. pivot indexes the canonical node order over depth <= t.
/// Requires p majorized by q and env depth >= t+1; arity capped at 5
/// (the check enumerates all K! subtree permutations).
InterpolationReport tree_interpolation_check(const TreeIncrementDist& p,
                                             const TreeIncrementDist& q, const TreeEnv& env,
                                             int t, size_t pivot, double tol);

/// Exact laws of the ladder W_0 = Z^q, ..., W_N = Z^p at horizon t+1 under
/// full enumeration of the spec; `order` defaults to the canonical one.
std::vector<FiniteDist> tree_ladder_laws(const TreeIncrementDist& p, const TreeIncrementDist& q,
                                         const EnvSpec& spec, int t, uint64_t cap,
                                         const std::vector<TreeNodeId>* order = nullptr,
                                         int threads = 0);

}  // namespace rwre
