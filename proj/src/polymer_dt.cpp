#include "rwre/polymer_dt.hpp"

#include <algorithm>
#include <cmath>

namespace rwre {

namespace {

void check_window_covers(const LatticeField& field, const LatticeWindow& reach, int t) {
    if (field.horizon() < t) throw WindowError("field horizon shorter than walk horizon");
    for (int s = 1; s <= t; ++s) {
        if (!field.window().slices[static_cast<size_t>(s - 1)].covers(
                reach.slices[static_cast<size_t>(s - 1)]))
            throw WindowError("field window does not cover the reachable set at time " +
                              std::to_string(s));
    }
}

}  // namespace

PartitionResult partition_function_profile(const LatticeField& field, const IncrementDist& p,
                                           int t, MassProfile* profile) {
    if (t < 0) throw ConfigError("negative horizon");
    PartitionResult res;
    res.horizon = t;
    if (t == 0) {
        res.value = 1.0;
        if (profile) {
            profile->time = 0;
            profile->box = Box::single(origin_site(p.dim()));
            profile->mass = {1.0};
        }
        return res;
    }
    const LatticeWindow reach = reach_window(p.support(), t);
    check_window_covers(field, reach, t);

    Box prev_box = Box::single(origin_site(p.dim()));
    std::vector<double> prev = {1.0};
    for (int s = 1; s <= t; ++s) {
        const Box& cur_box = reach.slices[static_cast<size_t>(s - 1)];
        std::vector<double> cur(cur_box.size(), 0.0);
        for (uint64_t idx = 0; idx < prev_box.size(); ++idx) {
            const double m = prev[idx];
            if (m == 0.0) continue;
            const Site from = prev_box.site(idx);
            for (size_t k = 0; k < p.size(); ++k) {
                const Site to = add_sites(from, p.support()[k]);
                cur[cur_box.index(to)] += m * p.probs()[k];
            }
        }
        for (uint64_t idx = 0; idx < cur_box.size(); ++idx) {
            if (cur[idx] == 0.0) continue;
            cur[idx] *= 1.0 + field.at(s, cur_box.site(idx));
        }
        prev_box = cur_box;
        prev = std::move(cur);
    }
    NeumaierSum z;
    for (double m : prev) z.add(m);
    res.value = z.value();
    if (profile) {
        profile->time = t;
        profile->box = prev_box;
        profile->mass = prev;
    }
    return res;
}

PartitionResult partition_function(const LatticeField& field, const IncrementDist& p, int t) {
    return partition_function_profile(field, p, t, nullptr);
}

namespace {

/// Shared engine construction; `shift` may be null for the unshifted case.
void build_dp_tables(const IncrementDist& p, int t, const LatticeWindow& window,
                     const LatticePath* shift, std::vector<uint64_t>& slice_sizes,
                     std::vector<uint64_t>& window_sizes,
                     std::vector<std::vector<double>>& step_probs,
                     std::vector<std::vector<uint32_t>>& step_src,
                     std::vector<std::vector<uint32_t>>& step_dst,
                     std::vector<std::vector<uint32_t>>& field_index) {
    if (t < 1) throw ConfigError("engine horizon must be >= 1");
    if (window.horizon() < t) throw WindowError("window horizon shorter than walk horizon");
    if (shift && static_cast<int>(shift->size()) != t + 1)
        throw ConfigError("shift path must have positions x_0..x_t");
    const LatticeWindow reach = reach_window(p.support(), t);
    Box prev_box = Box::single(origin_site(p.dim()));
    for (int s = 1; s <= t; ++s) {
        const Box& cur = reach.slices[static_cast<size_t>(s - 1)];
        const Box& win = window.slices[static_cast<size_t>(s - 1)];
        slice_sizes.push_back(cur.size());
        window_sizes.push_back(win.size());
        std::vector<double> probs;
        std::vector<uint32_t> src, dst;
        for (uint64_t idx = 0; idx < prev_box.size(); ++idx) {
            const Site from = prev_box.site(idx);
            for (size_t k = 0; k < p.size(); ++k) {
                const Site to = add_sites(from, p.support()[k]);
                src.push_back(static_cast<uint32_t>(idx));
                dst.push_back(static_cast<uint32_t>(cur.index(to)));
                probs.push_back(p.probs()[k]);
            }
        }
        std::vector<uint32_t> fmap(cur.size());
        for (uint64_t idx = 0; idx < cur.size(); ++idx) {
            Site site = cur.site(idx);
            if (shift) site = add_sites(site, (*shift)[static_cast<size_t>(s)]);
            if (!win.contains(site))
                throw WindowError(
                    "window does not cover the (shifted) reachable set at time " +
                    std::to_string(s));
            fmap[idx] = static_cast<uint32_t>(win.index(site));
        }
        step_probs.push_back(std::move(probs));
        step_src.push_back(std::move(src));
        step_dst.push_back(std::move(dst));
        field_index.push_back(std::move(fmap));
        prev_box = cur;
    }
}

}  // namespace

PolymerDp::PolymerDp(const IncrementDist& p, int t, const LatticeWindow& window)
    : horizon_(t) {
    build_dp_tables(p, t, window, nullptr, slice_sizes_, window_sizes_, step_probs_,
                    step_src_, step_dst_, field_index_);
}

PolymerDp::PolymerDp(const IncrementDist& p, int t, const LatticeWindow& window,
                     const LatticePath& shift)
    : horizon_(t) {
    build_dp_tables(p, t, window, &shift, slice_sizes_, window_sizes_, step_probs_,
                    step_src_, step_dst_, field_index_);
}

PolymerDp::Scratch PolymerDp::make_scratch() const {
    Scratch s;
    s.u.emplace_back(1);
    for (uint64_t n : slice_sizes_) s.u.emplace_back(n);
    return s;
}

double PolymerDp::value(const LatticeField& field, Scratch& scratch) const {
    if (scratch.u.size() != slice_sizes_.size() + 1 ||
        scratch.u.back().size() != slice_sizes_.back())
        throw ConfigError("scratch shape does not match this engine");
    scratch.u[0][0] = 1.0;
    for (int s = 1; s <= horizon_; ++s) {
        const auto& prev = scratch.u[static_cast<size_t>(s - 1)];
        auto& cur = scratch.u[static_cast<size_t>(s)];
        std::fill(cur.begin(), cur.end(), 0.0);
        const auto& probs = step_probs_[static_cast<size_t>(s - 1)];
        const auto& src = step_src_[static_cast<size_t>(s - 1)];
        const auto& dst = step_dst_[static_cast<size_t>(s - 1)];
        for (size_t k = 0; k < probs.size(); ++k) cur[dst[k]] += prev[src[k]] * probs[k];
        const auto& fmap = field_index_[static_cast<size_t>(s - 1)];
        const auto& vals = field.slice_values(s);
        if (vals.size() != window_sizes_[static_cast<size_t>(s - 1)])
            throw WindowError("field window does not match the engine binding");
        for (size_t idx = 0; idx < cur.size(); ++idx)
            cur[idx] *= 1.0 + vals[fmap[idx]];
    }
    NeumaierSum z;
    for (double m : scratch.u[static_cast<size_t>(horizon_)]) z.add(m);
    return z.value();
}

double path_weight(const LatticeField& field, const LatticePath& x, int t) {
    if (static_cast<int>(x.size()) < t + 1) throw ConfigError("path shorter than horizon");
    double w = 1.0;
    for (int s = 1; s <= t; ++s) {
        w *= 1.0 + field.at(s, x[static_cast<size_t>(s)]);
        if (w == 0.0) return 0.0;  // e^{log 0} = 0, kept multiplicative
    }
    return w;
}

bool consistency_check(const LatticeField& field, const LatticePath& x, const LatticePath& y,
                       int t, double tol) {
    const double lhs = path_weight(field, add_paths(x, y), t);
    const LatticeField shifted = shift_lattice(field, y);
    const double rhs = path_weight(shifted, x, t);
    return std::abs(lhs - rhs) <= tol;
}

JointDist joint_partition_distribution(const EnvSpec& spec, const IncrementDist& p1,
                                       const IncrementDist& p2, int t, uint64_t cap,
                                       int threads) {
    if (p1.dim() != p2.dim()) throw ConfigError("walk dimension mismatch");
    const LatticeWindow window =
        union_window(reach_window(p1.support(), t), reach_window(p2.support(), t));
    const uint64_t n = enumeration_size(spec, window, cap);

    const PolymerDp dp1(p1, t, window);
    const PolymerDp dp2(p2, t, window);
    const uint64_t block = 4096;
    const uint64_t n_blocks = (n + block - 1) / block;
    std::vector<JointDist> partial(n_blocks);
    for_each_block(n, block, threads, [&](uint64_t b, uint64_t lo, uint64_t hi) {
        JointDist local;
        LatticeField f(t, window);
        PolymerDp::Scratch s1 = dp1.make_scratch(), s2 = dp2.make_scratch();
        for (uint64_t k = lo; k < hi; ++k) {
            double prob = 0.0;
            decode_lattice_config_into(spec, k, f, &prob);
            local.add(dp1.value(f, s1), dp2.value(f, s2), prob);
        }
        local.finalize();
        partial[b] = std::move(local);
    });
    JointDist out;
    for (const auto& loc : partial)
        for (size_t k = 0; k < loc.size(); ++k) out.add(loc.z1()[k], loc.z2()[k], loc.probs()[k]);
    out.finalize();
    return out;
}

double annealed_mean(const EnvSpec& spec, int t) {
    return std::pow(spec.mean_factor(), static_cast<double>(t));
}

FreeEnergyEstimate free_energy_estimate(const EnvSpec& spec, const IncrementDist& p, int t,
                                        uint64_t n_env, uint64_t seed, int threads) {
    if (t < 1) throw ConfigError("free energy horizon must be >= 1");
    if (n_env < 1) throw ConfigError("need at least one environment");
    const LatticeWindow window = reach_window(p.support(), t);
    std::vector<double> z(n_env);
    for_each_block(n_env, 256, threads, [&](uint64_t, uint64_t lo, uint64_t hi) {
        for (uint64_t i = lo; i < hi; ++i) {
            const LatticeField f =
                sample_lattice_field(spec, t, window, substream_seed(seed, i));
            z[i] = partition_function(f, p, t).value;
        }
    });
    std::vector<double> logs;
    logs.reserve(n_env);
    uint64_t zeros = 0;
    for (double v : z) {
        if (v > 0.0)
            logs.push_back(std::log(v) / static_cast<double>(t));
        else
            ++zeros;
    }
    if (logs.empty())
        throw ResourceError(
            "degenerate: free energy -inf at this horizon (all sampled partition functions "
            "are zero)");
    const MeanSE ms = mean_se(logs);
    FreeEnergyEstimate out;
    out.estimate = ms.mean;
    out.se = ms.se;
    out.zero_fraction = static_cast<double>(zeros) / static_cast<double>(n_env);
    out.n_total = n_env;
    out.n_surviving = logs.size();
    return out;
}

double martingale_fractional_moment_exact(const EnvSpec& spec, const IncrementDist& p, int t,
                                          double r, uint64_t cap, int threads) {
    if (r <= 0.0 || r > 1.0) throw ConfigError("fractional exponent must be in (0, 1]");
    const LatticeWindow window = reach_window(p.support(), t);
    const uint64_t n = enumeration_size(spec, window, cap);
    const double alpha = std::log(spec.mean_factor());
    const double scale = std::exp(-alpha * static_cast<double>(t));
    const PolymerDp dp(p, t, window);
    const uint64_t block = 4096;
    const uint64_t n_blocks = n == 0 ? 0 : (n + block - 1) / block;
    std::vector<NeumaierSum> partial(n_blocks);
    for_each_block(n, block, threads, [&](uint64_t b, uint64_t lo, uint64_t hi) {
        NeumaierSum acc;
        LatticeField f(t, window);
        PolymerDp::Scratch scratch = dp.make_scratch();
        for (uint64_t k = lo; k < hi; ++k) {
            double prob = 0.0;
            decode_lattice_config_into(spec, k, f, &prob);
            acc.add(prob * std::pow(dp.value(f, scratch) * scale, r));
        }
        partial[b] = acc;
    });
    NeumaierSum total;
    for (const auto& pb : partial) total.merge(pb);
    return total.value();
}

MeanSE martingale_fractional_moment_mc(const EnvSpec& spec, const IncrementDist& p, int t,
                                       double r, uint64_t n_env, uint64_t seed, int threads) {
    if (r <= 0.0 || r > 1.0) throw ConfigError("fractional exponent must be in (0, 1]");
    const LatticeWindow window = reach_window(p.support(), t);
    const double alpha = std::log(spec.mean_factor());
    const double scale = std::exp(-alpha * static_cast<double>(t));
    std::vector<double> vals(n_env);
    for_each_block(n_env, 256, threads, [&](uint64_t, uint64_t lo, uint64_t hi) {
        for (uint64_t i = lo; i < hi; ++i) {
            const LatticeField f =
                sample_lattice_field(spec, t, window, substream_seed(seed, i));
            vals[i] = std::pow(partition_function(f, p, t).value * scale, r);
        }
    });
    return mean_se(vals);
}

// ---------------------------------------------------------------------------
// Static environment

LatticeField static_field_from_sites(const std::vector<double>& xi, const Box& site_box,
                                     const LatticeWindow& window) {
    if (xi.size() != site_box.size()) throw ConfigError("xi length does not match site box");
    LatticeField field(window.horizon(), window);
    for (int s = 1; s <= window.horizon(); ++s) {
        const Box& b = window.slices[static_cast<size_t>(s - 1)];
        if (!site_box.covers(b)) throw WindowError("static site box does not cover slice window");
        auto& vals = field.slice_values(s);
        for (uint64_t idx = 0; idx < b.size(); ++idx) vals[idx] = xi[site_box.index(b.site(idx))];
    }
    return field;
}

namespace {

Box spatial_hull(const std::vector<IncrementDist>& walks, int t) {
    LatticeWindow w = reach_window(walks.front().support(), t);
    for (size_t i = 1; i < walks.size(); ++i)
        w = union_window(w, reach_window(walks[i].support(), t));
    Box hull = w.slices.back();
    for (const auto& b : w.slices) {
        for (size_t k = 0; k < hull.lo.size(); ++k) {
            hull.lo[k] = std::min(hull.lo[k], b.lo[k]);
            hull.hi[k] = std::max(hull.hi[k], b.hi[k]);
        }
    }
    return hull;
}

}  // namespace

std::vector<StaticEnvRow> static_env_experiment(const EnvSpec& xi_spec,
                                                const std::vector<IncrementDist>& walks, int t,
                                                uint64_t n_env, uint64_t seed, int threads) {
    if (walks.empty()) throw ConfigError("need at least one walk");
    const Box sites = spatial_hull(walks, t);
    std::vector<LatticeWindow> windows;
    for (const auto& w : walks) windows.push_back(reach_window(w.support(), t));
    const double probe = annealed_mean(xi_spec, t);

    const size_t nw = walks.size();
    std::vector<std::vector<double>> zs(nw, std::vector<double>(n_env));
    for_each_block(n_env, 128, threads, [&](uint64_t, uint64_t lo, uint64_t hi) {
        for (uint64_t i = lo; i < hi; ++i) {
            Rng rng(substream_seed(seed, i));
            std::vector<double> xi(sites.size());
            for (auto& v : xi) v = xi_spec.sample_value(rng);
            for (size_t w = 0; w < nw; ++w) {
                const LatticeField f = static_field_from_sites(xi, sites, windows[w]);
                zs[w][i] = partition_function(f, walks[w], t).value;
            }
        }
    });
    std::vector<StaticEnvRow> rows(nw);
    for (size_t w = 0; w < nw; ++w) {
        NeumaierSum concave, convex;
        uint64_t zeros = 0;
        for (double z : zs[w]) {
            concave.add(std::min(z, probe));
            convex.add(z * z);
            if (z == 0.0) ++zeros;
        }
        const MeanSE ms = mean_se(zs[w]);
        rows[w].mean_z = ms.mean;
        rows[w].se_mean = ms.se;
        rows[w].concave_probe = concave.value() / static_cast<double>(n_env);
        rows[w].convex_probe = convex.value() / static_cast<double>(n_env);
        rows[w].zero_fraction = static_cast<double>(zeros) / static_cast<double>(n_env);
    }
    return rows;
}

std::vector<FiniteDist> static_env_exact_laws(const EnvSpec& xi_spec,
                                              const std::vector<IncrementDist>& walks, int t,
                                              uint64_t cap) {
    if (walks.empty()) throw ConfigError("need at least one walk");
    const Box sites = spatial_hull(walks, t);
    std::vector<LatticeWindow> windows;
    for (const auto& w : walks) windows.push_back(reach_window(w.support(), t));

    const uint64_t m = xi_spec.atom_count();
    uint64_t n = 1;
    for (uint64_t c = 0; c < sites.size(); ++c) {
        if (n > cap / m + 1) throw ResourceError("static enumeration exceeds cap");
        n *= m;
    }
    if (n > cap) throw ResourceError("static enumeration exceeds cap");

    std::vector<std::vector<double>> values(walks.size());
    std::vector<double> probs;
    std::vector<double> xi(sites.size());
    for (uint64_t k = 0; k < n; ++k) {
        uint64_t rem = k;
        double prob = 1.0;
        for (auto& v : xi) {
            const size_t a = static_cast<size_t>(rem % m);
            rem /= m;
            v = xi_spec.atoms()[a].value;
            prob *= xi_spec.atoms()[a].prob;
        }
        probs.push_back(prob);
        for (size_t w = 0; w < walks.size(); ++w) {
            const LatticeField f = static_field_from_sites(xi, sites, windows[w]);
            values[w].push_back(partition_function(f, walks[w], t).value);
        }
    }
    std::vector<FiniteDist> out;
    out.reserve(walks.size());
    for (auto& v : values) out.emplace_back(std::move(v), probs);
    return out;
}

}  // namespace rwre
