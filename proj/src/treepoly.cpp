#include "rwre/treepoly.hpp"

#include <algorithm>
#include <cmath>

namespace rwre {

namespace {
constexpr double kMassTol = 1e-12;
constexpr int kMaxPermArity = 5;
}

TreeIncrementDist::TreeIncrementDist(int K, std::vector<double> p)
    : arity(K), probs(std::move(p)) {
    if (K < 2) throw ConfigError("tree arity must be >= 2");
    if (static_cast<int>(probs.size()) != K) throw ConfigError("tree law size mismatch");
    double mass = 0.0;
    for (double w : probs) {
        if (w < 0.0) throw ConfigError("negative tree step probability");
        mass += w;
    }
    if (std::abs(mass - 1.0) > kMassTol) throw ConfigError("tree law does not sum to 1");
}

TreeIncrementDist TreeIncrementDist::uniform(int K) {
    return TreeIncrementDist(K, std::vector<double>(static_cast<size_t>(K),
                                                    1.0 / static_cast<double>(K)));
}

TreeIncrementDist TreeIncrementDist::dirac(int K, int child) {
    std::vector<double> p(static_cast<size_t>(K), 0.0);
    p.at(static_cast<size_t>(child)) = 1.0;
    return TreeIncrementDist(K, std::move(p));
}

void InhomogWalk::set_override(const TreeNodeId& v, TreeIncrementDist law) {
    if (law.arity != arity_) throw ConfigError("override arity mismatch");
    overrides_[v] = std::move(law);
}

const TreeIncrementDist& InhomogWalk::law_at(const TreeNodeId& v) const {
    const auto it = overrides_.find(v);
    return it == overrides_.end() ? default_law_ : it->second;
}

PartitionResult tree_partition_function(const TreeEnv& env, const InhomogWalk& walk, int t) {
    if (t < 0) throw ConfigError("negative horizon");
    if (walk.arity() != env.arity()) throw ConfigError("walk/env arity mismatch");
    if (t > env.depth()) throw WindowError("tree horizon exceeds environment depth");
    PartitionResult res;
    res.horizon = t;
    if (t == 0) {
        res.value = 1.0;
        return res;
    }
    const int K = env.arity();
    // g at depth t is identically 1; sweep upward
    std::vector<double> g(tree_level_size(K, t), 1.0);
    for (int l = t - 1; l >= 0; --l) {
        std::vector<double> up(tree_level_size(K, l));
        const auto& omega = env.level_values(l + 1);
        for (uint64_t idx = 0; idx < up.size(); ++idx) {
            const TreeIncrementDist& law = walk.law_at(TreeNodeId{l, idx});
            double acc = 0.0;
            for (int a = 0; a < K; ++a) {
                const uint64_t child = idx * static_cast<uint64_t>(K) + static_cast<uint64_t>(a);
                acc += law.probs[static_cast<size_t>(a)] * (1.0 + omega[child]) * g[child];
            }
            up[idx] = acc;
        }
        g = std::move(up);
    }
    res.value = g[0];
    return res;
}

PartitionResult tree_partition_function(const TreeEnv& env, const TreeIncrementDist& law, int t) {
    return tree_partition_function(env, InhomogWalk(env.arity(), law), t);
}

std::vector<TreeNodeId> canonical_node_order(int arity, int t) {
    std::vector<TreeNodeId> order;
    for (int depth = t; depth >= 0; --depth) {
        const uint64_t n = tree_level_size(arity, depth);
        for (uint64_t idx = 0; idx < n; ++idx) order.push_back(TreeNodeId{depth, idx});
    }
    return order;
}

TreeEnv necessity_env(int r, int K) {
    TreeEnv env(K, 1);
    for (int a = 0; a < K; ++a)
        env.set(TreeNodeId{1, static_cast<uint64_t>(a)}, a == r ? 0.0 : -1.0);
    return env;
}

NecessityReport necessity_report(const TreeIncrementDist& p, const TreeIncrementDist& q,
                                 double tol) {
    if (p.arity != q.arity) throw ConfigError("arity mismatch");
    const int K = p.arity;
    std::vector<double> zp, zq, w;
    for (int r = 0; r < K; ++r) {
        const TreeEnv env = necessity_env(r, K);
        zp.push_back(tree_partition_function(env, p, 1).value);
        zq.push_back(tree_partition_function(env, q, 1).value);
        w.push_back(1.0 / static_cast<double>(K));
    }
    NecessityReport rep;
    rep.law_p = FiniteDist(zp, w);
    rep.law_q = FiniteDist(zq, w);
    // p majorized by q <=> sum_r f(p(r)) >= sum_r f(q(r)) for concave f
    // <=> Z^q <=_cv Z^p under the uniform mixture
    rep.order = concave_order_exact(rep.law_q, rep.law_p, tol);
    return rep;
}

bool necessity_check(const TreeIncrementDist& p, const TreeIncrementDist& q, double tol) {
    return necessity_report(p, q, tol).order.ordered;
}

ConcaveOrderReport tree_theorem_sufficiency_check(const TreeIncrementDist& p,
                                                  const TreeIncrementDist& q, const EnvSpec& spec,
                                                  int t, uint64_t cap, double tol, int threads) {
    if (p.arity != q.arity) throw ConfigError("arity mismatch");
    const auto cert = is_majorized(std::span<const double>(p.probs),
                                   std::span<const double>(q.probs), 1e-9);
    if (!cert.majorized)
        throw ConfigError("sufficiency check requires p majorized by q; certify the pair first");
    const int K = p.arity;
    const uint64_t n = tree_enumeration_size(spec, K, t, cap);

    const uint64_t block = 4096;
    const uint64_t n_blocks = (n + block - 1) / block;
    std::vector<JointDist> partial(n_blocks);
    for_each_block(n, block, threads, [&](uint64_t b, uint64_t lo, uint64_t hi) {
        JointDist local;
        for (uint64_t k = lo; k < hi; ++k) {
            double prob = 0.0;
            const TreeEnv env = decode_tree_config(spec, K, t, k, &prob);
            local.add(tree_partition_function(env, p, t).value,
                      tree_partition_function(env, q, t).value, prob);
        }
        local.finalize();
        partial[b] = std::move(local);
    });
    JointDist joint;
    for (const auto& loc : partial)
        for (size_t k = 0; k < loc.size(); ++k)
            joint.add(loc.z1()[k], loc.z2()[k], loc.probs()[k]);
    joint.finalize();
    // Z^q <=_cv Z^p
    return concave_order_exact(joint.marginal2(), joint.marginal1(), tol);
}

// ---------------------------------------------------------------------------
// Interpolation ladder

namespace {

/// Walk r_i of the ladder: p at the first `pivot` nodes of the order, the
/// default q elsewhere.
InhomogWalk ladder_walk(const TreeIncrementDist& p, const TreeIncrementDist& q,
                        const std::vector<TreeNodeId>& order, size_t pivot) {
    InhomogWalk walk(p.arity, q);
    for (size_t j = 0; j < pivot; ++j) walk.set_override(order[j], p);
    return walk;
}

/// Continuation weight from `from` down to depth `horizon` under `walk`:
/// product over remaining steps of law-prob x (1 + omega at the child).
double continuation(const TreeEnv& env, const InhomogWalk& walk, const TreeNodeId& from,
                    int horizon) {
    if (from.depth == horizon) return 1.0;
    const int K = env.arity();
    const TreeIncrementDist& law = walk.law_at(from);
    double acc = 0.0;
    for (int a = 0; a < K; ++a) {
        const TreeNodeId child = tree_child(from, K, a);
        acc += law.probs[static_cast<size_t>(a)] * (1.0 + env.at(child)) *
               continuation(env, walk, child, horizon);
    }
    return acc;
}

std::vector<std::vector<int>> all_permutations(int K) {
    std::vector<int> perm(static_cast<size_t>(K));
    for (int a = 0; a < K; ++a) perm[static_cast<size_t>(a)] = a;
    std::vector<std::vector<int>> out;
    do {
        out.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

}  // namespace

InterpolationReport tree_interpolation_check(const TreeIncrementDist& p,
                                             const TreeIncrementDist& q, const TreeEnv& env,
                                             int t, size_t pivot, double tol) {
    if (p.arity != q.arity || p.arity != env.arity()) throw ConfigError("arity mismatch");
    const int K = p.arity;
    if (K > kMaxPermArity)
        throw ResourceError("interpolation check enumerates K! permutations; K capped at " +
                            std::to_string(kMaxPermArity));
    if (env.depth() < t + 1) throw WindowError("interpolation needs env depth >= t+1");
    const auto cert = is_majorized(std::span<const double>(p.probs),
                                   std::span<const double>(q.probs), 1e-9);
    if (!cert.majorized) throw ConfigError("interpolation check requires p majorized by q");

    const std::vector<TreeNodeId> order = canonical_node_order(K, t);
    if (pivot >= order.size()) throw ConfigError("pivot outside node order");
    const TreeNodeId v = order[pivot];
    const int horizon = t + 1;

    const InhomogWalk walk_i = ladder_walk(p, q, order, pivot);
    const InhomogWalk walk_ip1 = ladder_walk(p, q, order, pivot + 1);

    InterpolationReport rep;
    rep.w_i = tree_partition_function(env, walk_i, horizon).value;
    rep.w_ip1 = tree_partition_function(env, walk_ip1, horizon).value;

    // common prefix weight b: environment factors and step probabilities
    // along root -> v (empty product when v is the root)
    double b = 1.0;
    {
        std::vector<int> steps(static_cast<size_t>(v.depth));
        uint64_t idx = v.index;
        for (int d = v.depth; d-- > 0;) {
            steps[static_cast<size_t>(d)] = static_cast<int>(idx % static_cast<uint64_t>(K));
            idx /= static_cast<uint64_t>(K);
        }
        TreeNodeId u{0, 0};
        for (int d = 0; d < v.depth; ++d) {
            const int a = steps[static_cast<size_t>(d)];
            b *= walk_i.law_at(u).probs[static_cast<size_t>(a)];
            u = tree_child(u, K, a);
            b *= 1.0 + env.at(u);
        }
    }

    // contributions of paths that avoid v: drop the edge into v by planting a
    // hard obstacle there (v = root has no such paths)
    double A = 0.0;
    if (v.depth > 0) {
        TreeEnv blocked = env;
        blocked.set(v, -1.0);
        A = tree_partition_function(blocked, walk_i, horizon).value;
    }

    auto w_hat = [&](int a, const TreeEnv& e) {
        const TreeNodeId child = tree_child(v, K, a);
        return (1.0 + e.at(child)) * continuation(e, walk_i, child, horizon);
    };

    double defect = 0.0;
    {
        double mix_q = 0.0, mix_p = 0.0;
        for (int a = 0; a < K; ++a) {
            const double wa = w_hat(a, env);
            mix_q += q.probs[static_cast<size_t>(a)] * wa;
            mix_p += p.probs[static_cast<size_t>(a)] * wa;
        }
        defect = std::max(std::abs(rep.w_i - (A + b * mix_q)),
                          std::abs(rep.w_ip1 - (A + b * mix_p)));
        rep.decomposition_ok = defect <= tol;
    }
    rep.prefix_blocked = b == 0.0;

    // permutation structure of the subtree weights
    const auto perms = all_permutations(K);
    const size_t n_perm = perms.size();
    std::vector<std::vector<double>> M(static_cast<size_t>(K),
                                       std::vector<double>(n_perm, 0.0));
    std::vector<double> base(static_cast<size_t>(K));
    for (int a = 0; a < K; ++a) base[static_cast<size_t>(a)] = w_hat(a, env);

    bool shift_ok = true;
    for (size_t pi = 0; pi < n_perm; ++pi) {
        const TreeEnv shifted = apply_elementary_shift(env, v, perms[pi]);
        for (int a = 0; a < K; ++a) {
            const double val = w_hat(a, shifted);
            M[static_cast<size_t>(a)][pi] = val;
            // the shifted environment reads subtree perm[a] of the original
            const double expect = base[static_cast<size_t>(perms[pi][static_cast<size_t>(a)])];
            if (std::abs(val - expect) > tol) {
                shift_ok = false;
                defect = std::max(defect, std::abs(val - expect));
            }
        }
    }
    rep.shift_identity_ok = shift_ok;

    // permuting the entries of any column by sigma yields the column of
    // pi o sigma
    auto perm_index = [&](const std::vector<int>& perm) -> size_t {
        const auto it = std::find(perms.begin(), perms.end(), perm);
        return static_cast<size_t>(it - perms.begin());
    };
    bool closure_ok = true;
    for (size_t pi = 0; pi < n_perm && closure_ok; ++pi) {
        for (size_t si = 0; si < n_perm && closure_ok; ++si) {
            std::vector<int> comp(static_cast<size_t>(K));
            for (int a = 0; a < K; ++a)
                comp[static_cast<size_t>(a)] =
                    perms[pi][static_cast<size_t>(perms[si][static_cast<size_t>(a)])];
            const size_t ci = perm_index(comp);
            for (int a = 0; a < K; ++a) {
                const double lhs =
                    M[static_cast<size_t>(perms[si][static_cast<size_t>(a)])][pi];
                const double rhs = M[static_cast<size_t>(a)][ci];
                if (std::abs(lhs - rhs) > tol) {
                    closure_ok = false;
                    defect = std::max(defect, std::abs(lhs - rhs));
                }
            }
        }
    }
    rep.column_closure_ok = closure_ok;

    // permutation-averaged concave inequality between the interpolants
    std::vector<double> C(n_perm, 0.0), D(n_perm, 0.0);
    for (size_t pi = 0; pi < n_perm; ++pi) {
        double cp = 0.0, cq = 0.0;
        for (int a = 0; a < K; ++a) {
            cp += p.probs[static_cast<size_t>(a)] * M[static_cast<size_t>(a)][pi];
            cq += q.probs[static_cast<size_t>(a)] * M[static_cast<size_t>(a)][pi];
        }
        C[pi] = A + b * cp;
        D[pi] = A + b * cq;
    }
    rep.averaging_ok = majorization_concave_sum_check(C, D, tol);
    rep.max_defect = defect;
    return rep;
}

std::vector<FiniteDist> tree_ladder_laws(const TreeIncrementDist& p, const TreeIncrementDist& q,
                                         const EnvSpec& spec, int t, uint64_t cap,
                                         const std::vector<TreeNodeId>* order_in, int threads) {
    if (p.arity != q.arity) throw ConfigError("arity mismatch");
    const int K = p.arity;
    const int horizon = t + 1;
    const std::vector<TreeNodeId> order =
        order_in ? *order_in : canonical_node_order(K, t);
    const uint64_t n = tree_enumeration_size(spec, K, horizon, cap);

    std::vector<InhomogWalk> walks;
    for (size_t i = 0; i <= order.size(); ++i) walks.push_back(ladder_walk(p, q, order, i));

    const size_t n_walks = walks.size();
    std::vector<std::vector<double>> values(n_walks);
    std::vector<double> probs(n);
    for (auto& v : values) v.resize(n);
    for_each_block(n, 2048, threads, [&](uint64_t, uint64_t lo, uint64_t hi) {
        for (uint64_t k = lo; k < hi; ++k) {
            double prob = 0.0;
            const TreeEnv env = decode_tree_config(spec, K, horizon, k, &prob);
            probs[k] = prob;
            for (size_t i = 0; i < n_walks; ++i)
                values[i][k] = tree_partition_function(env, walks[i], horizon).value;
        }
    });
    std::vector<FiniteDist> laws;
    laws.reserve(n_walks);
    for (auto& v : values) laws.emplace_back(std::move(v), probs);
    return laws;
}

}  // namespace rwre
