#include "rwre/cli_support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace rwre::cli {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

uint64_t require_seed(const ordered_json& cfg, std::optional<uint64_t> seed_override) {
    if (seed_override) return *seed_override;
    if (cfg.contains("seed") && cfg["seed"].is_number())
        return cfg["seed"].get<uint64_t>();
    throw ConfigError("stochastic subcommand needs a seed (config \"seed\" or --seed)");
}

double get_num(const ordered_json& cfg, const std::string& key) {
    const auto& j = require_field(cfg, key);
    if (!j.is_number()) throw ConfigError("field \"" + key + "\" must be a number");
    return j.get<double>();
}

double get_num_or(const ordered_json& cfg, const std::string& key, double fallback) {
    if (!cfg.contains(key)) return fallback;
    return get_num(cfg, key);
}

int get_int(const ordered_json& cfg, const std::string& key) {
    const auto& j = require_field(cfg, key);
    if (!j.is_number_integer()) throw ConfigError("field \"" + key + "\" must be an integer");
    return j.get<int>();
}

int get_int_or(const ordered_json& cfg, const std::string& key, int fallback) {
    if (!cfg.contains(key)) return fallback;
    return get_int(cfg, key);
}

uint64_t get_u64_or(const ordered_json& cfg, const std::string& key, uint64_t fallback) {
    if (!cfg.contains(key)) return fallback;
    return require_field(cfg, key).get<uint64_t>();
}

std::vector<double> get_num_vector(const ordered_json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a non-empty array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(what + " entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

ordered_json order_report_json(const ConcaveOrderReport& rep) {
    ordered_json j;
    j["verdict"] = rep.ordered;
    j["mean_gap"] = rep.mean_gap;
    j["worst_violation"] = rep.worst_violation;
    j["test_points"] = rep.test_points;
    j["point_gaps"] = rep.point_gaps;
    return j;
}

ordered_json interval_json(const IntervalEstimate& est) {
    ordered_json j;
    j["lo"] = est.lo;
    j["hi"] = est.hi;
    j["mid"] = est.mid();
    j["width"] = est.width();
    j["box_radius"] = est.box_radius;
    j["series_terms"] = est.series_terms_total;
    j["declared_eps"] = est.declared_eps;
    return j;
}

}  // namespace

const ordered_json& require_field(const ordered_json& cfg, const std::string& key) {
    if (!cfg.contains(key)) throw ConfigError("missing config field \"" + key + "\"");
    return cfg[key];
}

EnvSpec parse_env_spec(const ordered_json& j) {
    const auto& atoms = require_field(j, "atoms");
    if (!atoms.is_array() || atoms.empty())
        throw ConfigError("env spec atoms must be a non-empty array");
    std::vector<EnvAtom> parsed;
    for (const auto& a : atoms) {
        if (!a.is_array() || a.size() != 2)
            throw ConfigError("env atom must be [value, prob]");
        parsed.push_back({a[0].get<double>(), a[1].get<double>()});
    }
    return EnvSpec(std::move(parsed));
}

IncrementDist parse_walk(const ordered_json& j) {
    const int dim = get_int_or(j, "dim", 1);
    const auto& support = require_field(j, "support");
    const auto& probs = require_field(j, "probs");
    if (!support.is_array() || !probs.is_array() || support.size() != probs.size())
        throw ConfigError("walk needs parallel \"support\" and \"probs\" arrays");
    std::vector<Site> sites;
    for (const auto& s : support) {
        if (s.is_number_integer()) {
            if (dim != 1) throw ConfigError("scalar support entries require dim = 1");
            sites.push_back(Site{s.get<int>()});
        } else if (s.is_array()) {
            Site site;
            for (const auto& c : s) site.push_back(c.get<int>());
            sites.push_back(std::move(site));
        } else {
            throw ConfigError("walk support entries must be integers or integer arrays");
        }
    }
    return IncrementDist(dim, std::move(sites), get_num_vector(probs, "walk probs"));
}

TreeIncrementDist parse_tree_law(const ordered_json& j, int arity) {
    return TreeIncrementDist(arity, get_num_vector(j, "tree law"));
}

OffspringSpec parse_offspring_spec(const ordered_json& j) {
    const auto& atoms = require_field(j, "atoms");
    std::vector<OffspringAtom> parsed;
    if (!atoms.is_array() || atoms.empty())
        throw ConfigError("offspring spec atoms must be a non-empty array");
    for (const auto& a : atoms) {
        OffspringAtom atom;
        atom.law = get_num_vector(require_field(a, "law"), "offspring law");
        atom.prob = get_num(a, "prob");
        parsed.push_back(std::move(atom));
    }
    return OffspringSpec(std::move(parsed));
}

MarkSet parse_mark_set(const ordered_json& j, std::optional<uint64_t> seed_override) {
    if (j.contains("marks")) {
        const double horizon = get_num(j, "horizon");
        const int dim = get_int_or(j, "dim", 1);
        const int radius = get_int_or(j, "box_radius", 0);
        std::vector<MarkPoint> marks;
        for (const auto& m : j["marks"]) {
            if (!m.is_array() || m.size() != 3)
                throw ConfigError("mark must be [time, site, r]");
            MarkPoint mp;
            mp.time = m[0].get<double>();
            if (m[1].is_number_integer())
                mp.site = Site{m[1].get<int>()};
            else
                for (const auto& c : m[1]) mp.site.push_back(c.get<int>());
            mp.value = m[2].get<double>();
            marks.push_back(std::move(mp));
        }
        return MarkSet(horizon, dim, radius, std::move(marks));
    }
    const double rate = get_num(j, "rate");
    const MarkLaw rho = parse_env_spec(require_field(j, "rho"));
    const double horizon = get_num(j, "horizon");
    const int radius = get_int(j, "box_radius");
    const int dim = get_int_or(j, "dim", 1);
    return sample_mark_set(rate, rho, horizon, radius, dim, require_seed(j, seed_override));
}

FiniteDist parse_finite_dist(const ordered_json& j) {
    return FiniteDist(get_num_vector(require_field(j, "values"), "dist values"),
                      get_num_vector(require_field(j, "probs"), "dist probs"));
}

std::string csv_to_string(const CsvTable& table) {
    std::string out;
    for (size_t k = 0; k < table.header.size(); ++k) {
        if (k) out += ",";
        out += table.header[k];
    }
    out += "\n";
    for (const auto& row : table.rows) {
        for (size_t k = 0; k < row.size(); ++k) {
            if (k) out += ",";
            out += row[k];
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Handlers

namespace {

RunOutcome run_order_exact(const ordered_json& cfg, std::optional<uint64_t>, int threads) {
    RunOutcome out;
    const double tol = get_num_or(cfg, "tol", 1e-9);
    const std::string source = cfg.contains("source") ? cfg["source"].get<std::string>()
                                                      : std::string("explicit");
    if (source == "explicit") {
        const FiniteDist x = parse_finite_dist(require_field(cfg, "x"));
        const FiniteDist y = parse_finite_dist(require_field(cfg, "y"));
        const auto rep = concave_order_exact(x, y, tol);
        out.outputs["order"] = order_report_json(rep);
        out.pass = rep.ordered;
    } else if (source == "polymer-pair") {
        const EnvSpec spec = parse_env_spec(require_field(cfg, "env_spec"));
        const IncrementDist p1 = parse_walk(require_field(cfg, "p1"));
        const IncrementDist q = parse_walk(require_field(cfg, "q"));
        const int t = get_int(cfg, "t");
        const uint64_t cap = get_u64_or(cfg, "cap", 10000000);
        const IncrementDist p2 = convolve(p1, q);
        const JointDist joint = joint_partition_distribution(spec, p1, p2, t, cap, threads);
        const auto rep = concave_order_exact(joint.marginal1(), joint.marginal2(), tol);
        out.outputs["mean_z1"] = joint.mean1();
        out.outputs["mean_z2"] = joint.mean2();
        out.outputs["annealed_mean"] = annealed_mean(spec, t);
        out.outputs["order"] = order_report_json(rep);
        out.pass = rep.ordered;
    } else {
        throw ConfigError("order-exact source must be \"explicit\" or \"polymer-pair\"");
    }
    return out;
}

RunOutcome run_order_empirical(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                               int threads) {
    RunOutcome out;
    const uint64_t seed = require_seed(cfg, seed_override);
    const double rate = get_num_or(cfg, "rate", 1.0);
    const MarkLaw rho = parse_env_spec(require_field(cfg, "rho"));
    const double kappa1 = get_num(cfg, "kappa1");
    const double kappa2 = get_num(cfg, "kappa2");
    const double t = get_num(cfg, "t");
    const uint64_t n = get_u64_or(cfg, "n", 100000);
    const size_t grid_points = static_cast<size_t>(get_int_or(cfg, "grid_points", 15));
    const double z = get_num_or(cfg, "z", 3.0);
    const bool bonferroni = cfg.contains("bonferroni") && cfg["bonferroni"].get<bool>();

    const CtEnvSamples s =
        ct_env_partition_samples(rate, rho, {kappa1, kappa2}, t, n, seed, 1e-7, 1, threads);
    // grid from pooled quantiles
    std::vector<double> pooled = s.z[0];
    pooled.insert(pooled.end(), s.z[1].begin(), s.z[1].end());
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> grid;
    for (size_t g = 1; g <= grid_points; ++g)
        grid.push_back(pooled[(pooled.size() - 1) * g / (grid_points + 1)]);
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const auto rep = concave_order_empirical(s.z[0], s.z[1], grid, z, bonferroni);
    out.outputs["kappa1"] = kappa1;
    out.outputs["kappa2"] = kappa2;
    out.outputs["n"] = n;
    out.outputs["grid_size"] = rep.grid_size;
    out.outputs["effective_z"] = rep.effective_z;
    out.outputs["mean_gap"] = rep.mean_gap;
    out.outputs["mean_gap_se"] = rep.mean_gap_se;
    out.outputs["verdict"] = rep.consistent_with_order;
    out.outputs["small_sample_warning"] = rep.small_sample_warning;
    CsvTable table{"gaps", {"point", "gap", "se"}, {}};
    ordered_json gaps = ordered_json::array();
    for (const auto& g : rep.gaps) {
        gaps.push_back({{"point", g.point}, {"gap", g.gap}, {"se", g.se}});
        table.rows.push_back({fmt(g.point), fmt(g.gap), fmt(g.se)});
    }
    out.outputs["gaps"] = gaps;
    out.tables.push_back(std::move(table));
    out.pass = rep.consistent_with_order;
    return out;
}

RunOutcome run_coupling_check(const ordered_json& cfg, std::optional<uint64_t>, int threads) {
    RunOutcome out;
    const EnvSpec spec = parse_env_spec(require_field(cfg, "env_spec"));
    const IncrementDist p1 = parse_walk(require_field(cfg, "p1"));
    const IncrementDist q = parse_walk(require_field(cfg, "q"));
    const int t = get_int(cfg, "t");
    const uint64_t cap = get_u64_or(cfg, "cap", 10000000);
    const double tol = get_num_or(cfg, "tol", 1e-12);
    const auto rep = coupling_identity_check(spec, p1, q, t, cap, tol, threads);
    out.outputs["max_defect"] = rep.max_defect;
    out.outputs["n_environments"] = rep.n_environments;
    out.outputs["n_shift_paths"] = rep.n_shift_paths;
    out.outputs["tol"] = tol;
    out.outputs["verdict"] = rep.ok;
    out.pass = rep.ok;
    return out;
}

RunOutcome run_majorization(const ordered_json& cfg, std::optional<uint64_t>, int) {
    RunOutcome out;
    const double tol = get_num_or(cfg, "tol", 1e-12);
    MajorizationCertificate cert;
    if (cfg.contains("p_walk")) {
        cert = is_majorized(parse_walk(require_field(cfg, "p_walk")),
                            parse_walk(require_field(cfg, "q_walk")), tol);
    } else {
        const auto p = get_num_vector(require_field(cfg, "p"), "p");
        const auto q = get_num_vector(require_field(cfg, "q"), "q");
        cert = is_majorized(p, q, tol);
    }
    out.outputs["verdict"] = cert.majorized;
    out.outputs["mass_mismatch"] = cert.mass_mismatch;
    out.outputs["partial_sum_gaps"] = cert.partial_sum_gaps;
    if (cert.failing_index) out.outputs["failing_index"] = *cert.failing_index;
    out.pass = cert.majorized;
    return out;
}

RunOutcome run_tree_theorem(const ordered_json& cfg, std::optional<uint64_t>, int threads) {
    RunOutcome out;
    const int K = get_int(cfg, "K");
    const int t = get_int(cfg, "t");
    const TreeIncrementDist p = parse_tree_law(require_field(cfg, "p"), K);
    const TreeIncrementDist q = parse_tree_law(require_field(cfg, "q"), K);
    const EnvSpec spec = parse_env_spec(require_field(cfg, "env_spec"));
    const uint64_t cap = get_u64_or(cfg, "cap", 10000000);
    const double tol = get_num_or(cfg, "tol", 1e-10);

    const bool majorized = is_majorized(std::span<const double>(p.probs),
                                        std::span<const double>(q.probs), 1e-12)
                               .majorized;
    const NecessityReport necc = necessity_report(p, q, tol);
    out.outputs["p_majorized_by_q"] = majorized;
    out.outputs["necessity_mixture"] = order_report_json(necc.order);

    bool pass = necc.order.ordered == majorized;
    if (majorized) {
        const auto suff = tree_theorem_sufficiency_check(p, q, spec, t, cap, tol, threads);
        out.outputs["sufficiency"] = order_report_json(suff);
        pass = pass && suff.ordered;
    } else {
        out.outputs["sufficiency"] =
            "skipped: p not majorized by q (necessity mixture must expose a violation)";
        pass = pass && necc.order.worst_violation > 0.0;
    }
    out.outputs["verdict"] = pass;
    out.pass = pass;
    return out;
}

RunOutcome run_tree_interpolation(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                                  int) {
    RunOutcome out;
    const int K = get_int(cfg, "K");
    const int t = get_int(cfg, "t");
    const TreeIncrementDist p = parse_tree_law(require_field(cfg, "p"), K);
    const TreeIncrementDist q = parse_tree_law(require_field(cfg, "q"), K);
    const double tol = get_num_or(cfg, "tol", 1e-12);

    TreeEnv env = [&] {
        const auto& e = require_field(cfg, "env");
        if (e.contains("spec"))
            return sample_tree_env(parse_env_spec(e["spec"]), K, t + 1,
                                   require_seed(e, seed_override));
        // explicit: level arrays, depth 1..t+1
        TreeEnv built(K, t + 1);
        const auto& levels = require_field(e, "levels");
        for (int l = 1; l <= t + 1; ++l) {
            auto vals = get_num_vector(levels[static_cast<size_t>(l - 1)], "env level");
            if (vals.size() != built.level_values(l).size())
                throw ConfigError("env level " + std::to_string(l) + " has the wrong size");
            built.level_values(l) = std::move(vals);
        }
        return built;
    }();

    const auto order = canonical_node_order(K, t);
    std::vector<size_t> pivots;
    if (!cfg.contains("pivots") || cfg["pivots"] == "all")
        for (size_t i = 0; i < order.size(); ++i) pivots.push_back(i);
    else
        for (const auto& v : cfg["pivots"]) pivots.push_back(v.get<size_t>());

    bool pass = true;
    CsvTable table{"pivots",
                   {"pivot", "depth", "w_i", "w_ip1", "decomposition", "shift_identity",
                    "column_closure", "averaging", "max_defect"},
                   {}};
    ordered_json rows = ordered_json::array();
    for (size_t i : pivots) {
        const auto rep = tree_interpolation_check(p, q, env, t, i, tol);
        pass = pass && rep.all_ok();
        ordered_json r;
        r["pivot"] = i;
        r["depth"] = order[i].depth;
        r["w_i"] = rep.w_i;
        r["w_ip1"] = rep.w_ip1;
        r["decomposition_ok"] = rep.decomposition_ok;
        r["shift_identity_ok"] = rep.shift_identity_ok;
        r["column_closure_ok"] = rep.column_closure_ok;
        r["averaging_ok"] = rep.averaging_ok;
        r["max_defect"] = rep.max_defect;
        rows.push_back(r);
        table.rows.push_back({std::to_string(i), std::to_string(order[i].depth), fmt(rep.w_i),
                              fmt(rep.w_ip1), rep.decomposition_ok ? "1" : "0",
                              rep.shift_identity_ok ? "1" : "0",
                              rep.column_closure_ok ? "1" : "0", rep.averaging_ok ? "1" : "0",
                              fmt(rep.max_defect)});
    }
    out.outputs["pivots"] = rows;
    out.outputs["verdict"] = pass;
    out.tables.push_back(std::move(table));
    out.pass = pass;
    return out;
}

LatticeField parse_or_sample_field(const ordered_json& cfg, const IncrementDist& walk, int t,
                                   std::optional<uint64_t> seed_override) {
    const auto& f = require_field(cfg, "field");
    if (f.contains("env_spec")) {
        const EnvSpec spec = parse_env_spec(f["env_spec"]);
        return sample_lattice_field(spec, t, reach_window(walk.support(), t),
                                    require_seed(f, seed_override));
    }
    const auto& slices = require_field(f, "slices");
    LatticeWindow window;
    for (const auto& s : slices) {
        Site lo, hi;
        for (const auto& c : require_field(s, "lo")) lo.push_back(c.get<int>());
        for (const auto& c : require_field(s, "hi")) hi.push_back(c.get<int>());
        window.slices.emplace_back(std::move(lo), std::move(hi));
    }
    LatticeField field(static_cast<int>(window.slices.size()), window,
                       get_num_or(f, "default", 0.0));
    for (int s = 1; s <= field.horizon(); ++s) {
        auto vals = get_num_vector(require_field(slices[static_cast<size_t>(s - 1)], "values"),
                                   "field values");
        if (vals.size() != field.slice_values(s).size())
            throw ConfigError("field slice " + std::to_string(s) + " has the wrong size");
        for (double v : vals)
            if (!(v >= -1.0)) throw ConfigError("field value below -1");
        field.slice_values(s) = std::move(vals);
    }
    return field;
}

RunOutcome run_polymer_dp(const ordered_json& cfg, std::optional<uint64_t> seed_override, int) {
    RunOutcome out;
    const IncrementDist walk = parse_walk(require_field(cfg, "walk"));
    const int t = get_int(cfg, "t");
    const LatticeField field = parse_or_sample_field(cfg, walk, t, seed_override);
    const PartitionResult res = partition_function(field, walk, t);
    out.outputs["z"] = res.value;
    out.outputs["t"] = res.horizon;
    return out;
}

RunOutcome run_free_energy(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                           int threads) {
    RunOutcome out;
    const EnvSpec spec = parse_env_spec(require_field(cfg, "env_spec"));
    const IncrementDist walk = parse_walk(require_field(cfg, "walk"));
    const int t = get_int(cfg, "t");
    const uint64_t n_env = get_u64_or(cfg, "n_env", 1000);
    const auto fe =
        free_energy_estimate(spec, walk, t, n_env, require_seed(cfg, seed_override), threads);
    out.outputs["estimate"] = fe.estimate;
    out.outputs["se"] = fe.se;
    out.outputs["zero_fraction"] = fe.zero_fraction;
    out.outputs["n_total"] = fe.n_total;
    out.outputs["n_surviving"] = fe.n_surviving;
    out.outputs["note"] = "finite-horizon estimator; biased at finite t";
    return out;
}

RunOutcome run_martingale_moment(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                                 int threads) {
    RunOutcome out;
    const EnvSpec spec = parse_env_spec(require_field(cfg, "env_spec"));
    const IncrementDist walk = parse_walk(require_field(cfg, "walk"));
    const int t = get_int(cfg, "t");
    const double r = get_num(cfg, "r");
    const std::string mode = require_field(cfg, "mode").get<std::string>();
    if (mode == "exact") {
        const uint64_t cap = get_u64_or(cfg, "cap", 10000000);
        out.outputs["value"] = martingale_fractional_moment_exact(spec, walk, t, r, cap, threads);
        out.outputs["mode"] = "exact-enumeration";
    } else if (mode == "mc") {
        const uint64_t n = get_u64_or(cfg, "n_env", 10000);
        const MeanSE ms = martingale_fractional_moment_mc(spec, walk, t, r, n,
                                                          require_seed(cfg, seed_override),
                                                          threads);
        out.outputs["value"] = ms.mean;
        out.outputs["se"] = ms.se;
        out.outputs["n"] = ms.n;
        out.outputs["mode"] = "monte-carlo";
    } else {
        throw ConfigError("martingale-moment mode must be \"exact\" or \"mc\"");
    }
    return out;
}

RunOutcome run_pam_exact(const ordered_json& cfg, std::optional<uint64_t> seed_override, int) {
    RunOutcome out;
    const MarkSet marks = parse_mark_set(require_field(cfg, "marks"), seed_override);
    const double kappa = get_num(cfg, "kappa");
    const double t = get_num(cfg, "t");
    const double eps = get_num_or(cfg, "eps", 1e-6);
    out.outputs["interval"] = interval_json(ct_partition_exact(marks, kappa, t, eps));
    out.outputs["n_marks"] = marks.marks().size();
    return out;
}

RunOutcome run_pam_mc(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                      int threads) {
    RunOutcome out;
    const MarkSet marks = parse_mark_set(require_field(cfg, "marks"), seed_override);
    const double kappa = get_num(cfg, "kappa");
    const double t = get_num(cfg, "t");
    const uint64_t n = get_u64_or(cfg, "n", 100000);
    const MCEstimate mc =
        ct_partition_mc(marks, kappa, t, n, require_seed(cfg, seed_override), threads);
    out.outputs["mean"] = mc.mean;
    out.outputs["se"] = mc.se;
    out.outputs["n"] = mc.n;
    if (cfg.contains("compare_exact") && cfg["compare_exact"].get<bool>()) {
        const double eps = get_num_or(cfg, "eps", 1e-6);
        const IntervalEstimate exact = ct_partition_exact(marks, kappa, t, eps);
        out.outputs["interval"] = interval_json(exact);
        const bool within =
            mc.mean >= exact.lo - 3.0 * mc.se && mc.mean <= exact.hi + 3.0 * mc.se;
        out.outputs["verdict"] = within;
        out.pass = within;
    }
    return out;
}

RunOutcome run_pam_ode_crosscheck(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                                  int) {
    RunOutcome out;
    const MarkSet marks = parse_mark_set(require_field(cfg, "marks"), seed_override);
    const double kappa = get_num(cfg, "kappa");
    const double t = get_num(cfg, "t");
    const double eps = get_num_or(cfg, "eps", 1e-8);
    const double step = get_num_or(cfg, "step", 0.25);
    const double tol = get_num_or(cfg, "tol", 1e-6);
    const int radius = cfg.contains("box_radius")
                           ? get_int(cfg, "box_radius")
                           : certified_radius(kappa, t, eps / 2.0) + 1;
    const OdeSolution sol = pam_ode_solve(marks, kappa, t, radius, step, eps);
    const IntervalEstimate z = ct_partition_exact(marks.time_reversed(), kappa, t, eps);
    const double diff = std::abs(sol.u_origin - z.mid());
    out.outputs["u_origin"] = sol.u_origin;
    out.outputs["ode_error_bound"] = sol.error_bound;
    out.outputs["reversed_interval"] = interval_json(z);
    out.outputs["abs_diff"] = diff;
    out.outputs["tol"] = tol;
    out.outputs["verdict"] = diff <= tol;
    out.pass = diff <= tol;
    return out;
}

RunOutcome run_lyapunov(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                        int threads) {
    RunOutcome out;
    const uint64_t seed = require_seed(cfg, seed_override);
    const double rate = get_num(cfg, "rate");
    const MarkLaw rho = parse_env_spec(require_field(cfg, "rho"));
    const double t = get_num(cfg, "t");
    const uint64_t n_env = get_u64_or(cfg, "n_env", 10000);
    const double eps = get_num_or(cfg, "eps", 1e-9);
    std::vector<double> kappas;
    for (const auto& k : require_field(cfg, "kappas")) kappas.push_back(k.get<double>());
    std::vector<double> rs;
    if (cfg.contains("rs"))
        for (const auto& r : cfg["rs"]) rs.push_back(r.get<double>());

    const CtEnvSamples samples =
        ct_env_partition_samples(rate, rho, kappas, t, n_env, seed, eps, 1, threads);
    out.outputs["t"] = t;
    out.outputs["n_env"] = n_env;
    out.outputs["max_interval_width"] = samples.max_interval_width;
    out.outputs["shared_box_radius"] = samples.box_radius;
    out.outputs["note"] =
        "finite-horizon estimates with standard errors; environments shared across kappas";

    CsvTable table{"estimates", {"kappa", "kind", "r", "estimate", "se", "zero_fraction"}, {}};
    ordered_json rows = ordered_json::array();
    for (size_t k = 0; k < kappas.size(); ++k) {
        const LyapunovEstimate quenched = lyapunov_quenched_from_samples(samples.z[k], t);
        ordered_json r;
        r["kappa"] = kappas[k];
        r["kind"] = "quenched";
        r["estimate"] = quenched.estimate;
        r["se"] = quenched.se;
        r["zero_fraction"] = quenched.zero_fraction;
        rows.push_back(r);
        table.rows.push_back({fmt(kappas[k]), "quenched", "", fmt(quenched.estimate),
                              fmt(quenched.se), fmt(quenched.zero_fraction)});
        for (double rr : rs) {
            const LyapunovEstimate ann = lyapunov_annealed_from_samples(samples.z[k], rr, t);
            ordered_json ra;
            ra["kappa"] = kappas[k];
            ra["kind"] = "annealed";
            ra["r"] = rr;
            ra["estimate"] = ann.estimate;
            ra["se"] = ann.se;
            rows.push_back(ra);
            table.rows.push_back({fmt(kappas[k]), "annealed", fmt(rr), fmt(ann.estimate),
                                  fmt(ann.se), fmt(ann.zero_fraction)});
        }
    }
    out.outputs["estimates"] = rows;
    out.tables.push_back(std::move(table));
    return out;
}

RunOutcome run_brw_dt(const ordered_json& cfg, std::optional<uint64_t> seed_override, int) {
    RunOutcome out;
    const OffspringSpec spec = parse_offspring_spec(require_field(cfg, "offspring_spec"));
    const IncrementDist walk = parse_walk(require_field(cfg, "walk"));
    const int t = get_int(cfg, "t");
    const uint64_t pop_cap = get_u64_or(cfg, "pop_cap", 1000000);
    const uint64_t seed = require_seed(cfg, seed_override);
    const LatticeWindow window = reach_window(walk.support(), t);
    const OffspringField field(spec, t, window, substream_seed(seed, 0));
    const DenseOffspringView view(field);
    const BRWStateDT st = simulate_brw_dt(view, walk, t, substream_seed(seed, 1), pop_cap);
    out.outputs["generation"] = st.generation;
    out.outputs["total"] = st.total();
    out.outputs["capped"] = st.capped;
    ordered_json occ = ordered_json::array();
    for (const auto& [site, count] : st.counts)
        occ.push_back({{"site", site}, {"count", count}});
    out.outputs["occupancy"] = occ;
    return out;
}

RunOutcome run_brw_ct(const ordered_json& cfg, std::optional<uint64_t> seed_override, int) {
    RunOutcome out;
    const MarkSet marks = parse_mark_set(require_field(cfg, "marks"), seed_override);
    CTBranchParams params;
    params.kappa = get_num(cfg, "kappa");
    params.lambda = get_num(cfg, "lambda");
    params.horizon = get_num(cfg, "t");
    const uint64_t pop_cap = get_u64_or(cfg, "pop_cap", 1000000);
    const bool log_events = cfg.contains("log_events") && cfg["log_events"].get<bool>();
    const CTBranchResult res =
        simulate_brw_ct(marks, params, require_seed(cfg, seed_override), pop_cap, log_events);
    out.outputs["alive"] = res.alive;
    out.outputs["capped"] = res.capped;
    out.outputs["n_events_logged"] = res.events.size();
    ordered_json occ = ordered_json::array();
    for (const auto& [site, count] : res.counts)
        occ.push_back({{"site", site}, {"count", count}});
    out.outputs["occupancy"] = occ;
    return out;
}

RunOutcome run_many_to_one(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                           int threads) {
    RunOutcome out;
    const std::string mode = require_field(cfg, "mode").get<std::string>();
    const uint64_t seed = require_seed(cfg, seed_override);
    if (mode == "dt") {
        const OffspringSpec spec = parse_offspring_spec(require_field(cfg, "offspring_spec"));
        const IncrementDist walk = parse_walk(require_field(cfg, "walk"));
        const int t = get_int(cfg, "t");
        const uint64_t n = get_u64_or(cfg, "n", 100000);
        const auto rep = many_to_one_check_dt(spec, walk, t, n, seed, threads);
        out.outputs["mc_mean"] = rep.mc_mean;
        out.outputs["mc_se"] = rep.mc_se;
        out.outputs["exact_z"] = rep.exact_z;
        out.outputs["deviation_sigmas"] = rep.deviation_sigmas;
        out.outputs["any_capped"] = rep.any_capped;
        const bool pass = rep.deviation_sigmas <= 3.0 && !rep.any_capped;
        out.outputs["verdict"] = pass;
        out.pass = pass;
    } else if (mode == "ct") {
        const MarkSet marks = parse_mark_set(require_field(cfg, "marks"), seed_override);
        CTBranchParams params;
        params.kappa = get_num(cfg, "kappa");
        params.lambda = get_num(cfg, "lambda");
        params.horizon = get_num(cfg, "t");
        const uint64_t n = get_u64_or(cfg, "n", 100000);
        const double eps = get_num_or(cfg, "eps", 1e-6);
        const auto rep = many_to_one_check_ct(marks, params, n, eps, seed, threads);
        out.outputs["mc_mean"] = rep.mc_mean;
        out.outputs["mc_se"] = rep.mc_se;
        out.outputs["exact_lo"] = rep.exact_lo;
        out.outputs["exact_hi"] = rep.exact_hi;
        out.outputs["any_capped"] = rep.any_capped;
        out.outputs["verdict"] = rep.within;
        out.pass = rep.within;
    } else {
        throw ConfigError("many-to-one mode must be \"dt\" or \"ct\"");
    }
    return out;
}

RunOutcome run_survival_phase(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                              int threads) {
    RunOutcome out;
    const std::string mode = require_field(cfg, "mode").get<std::string>();
    const uint64_t seed = require_seed(cfg, seed_override);
    out.outputs["note"] =
        "finite-horizon survival evidence; no asymptotic claim is asserted";
    if (mode == "dt") {
        const OffspringSpec spec = parse_offspring_spec(require_field(cfg, "offspring_spec"));
        std::vector<IncrementDist> walks;
        for (const auto& w : require_field(cfg, "walks")) walks.push_back(parse_walk(w));
        const int T = get_int(cfg, "T");
        const uint64_t n = get_u64_or(cfg, "n", 10000);
        const uint64_t pop_cap = get_u64_or(cfg, "pop_cap", 100000);
        const int fe_t = get_int_or(cfg, "fe_t", 12);
        const uint64_t fe_n = get_u64_or(cfg, "fe_n_env", 2000);
        const auto rows =
            survival_experiment_dt(spec, walks, T, n, seed, pop_cap, fe_n, fe_t, threads);
        CsvTable table{"survival",
                       {"walk", "frequency", "se", "capped_fraction", "free_energy",
                        "free_energy_se", "zero_fraction"},
                       {}};
        ordered_json jr = ordered_json::array();
        for (size_t w = 0; w < rows.size(); ++w) {
            ordered_json r;
            r["walk"] = w;
            r["survival_frequency"] = rows[w].survival_frequency;
            r["se"] = rows[w].frequency_se;
            r["capped_fraction"] = rows[w].capped_fraction;
            r["free_energy_estimate"] = rows[w].free_energy.estimate;
            r["free_energy_se"] = rows[w].free_energy.se;
            r["zero_fraction"] = rows[w].free_energy.zero_fraction;
            r["sign_agreement"] =
                (rows[w].free_energy.estimate > 0.0) == (rows[w].survival_frequency > 0.0);
            jr.push_back(r);
            table.rows.push_back({std::to_string(w), fmt(rows[w].survival_frequency),
                                  fmt(rows[w].frequency_se), fmt(rows[w].capped_fraction),
                                  fmt(rows[w].free_energy.estimate),
                                  fmt(rows[w].free_energy.se),
                                  fmt(rows[w].free_energy.zero_fraction)});
        }
        out.outputs["rows"] = jr;
        out.tables.push_back(std::move(table));
    } else if (mode == "ct") {
        const double rate = get_num(cfg, "rate");
        std::vector<double> kappas, lambdas;
        for (const auto& k : require_field(cfg, "kappas")) kappas.push_back(k.get<double>());
        for (const auto& l : require_field(cfg, "lambdas")) lambdas.push_back(l.get<double>());
        const double T = get_num(cfg, "T");
        const uint64_t n = get_u64_or(cfg, "n", 10000);
        const uint64_t pop_cap = get_u64_or(cfg, "pop_cap", 100000);
        const auto cells =
            survival_experiment_ct(rate, kappas, lambdas, T, n, seed, pop_cap, 1, threads);
        CsvTable table{"survival",
                       {"kappa", "lambda", "frequency", "se", "capped_fraction"},
                       {}};
        ordered_json jr = ordered_json::array();
        for (const auto& c : cells) {
            ordered_json r;
            r["kappa"] = c.kappa;
            r["lambda"] = c.lambda;
            r["survival_frequency"] = c.survival_frequency;
            r["se"] = c.frequency_se;
            r["capped_fraction"] = c.capped_fraction;
            jr.push_back(r);
            table.rows.push_back({fmt(c.kappa), fmt(c.lambda), fmt(c.survival_frequency),
                                  fmt(c.frequency_se), fmt(c.capped_fraction)});
        }
        out.outputs["cells"] = jr;
        // optional quenched exponents on a shorter horizon
        if (cfg.contains("lyapunov")) {
            const auto& ly = cfg["lyapunov"];
            const double lt = get_num(ly, "t");
            const uint64_t ln = get_u64_or(ly, "n_env", 2000);
            const MarkLaw disasters({{-1.0, 1.0}});
            const CtEnvSamples s = ct_env_partition_samples(rate, disasters, kappas, lt, ln,
                                                            substream_seed(seed, 777), 1e-7, 1,
                                                            threads);
            ordered_json lj = ordered_json::array();
            for (size_t k = 0; k < kappas.size(); ++k) {
                const auto est = lyapunov_quenched_from_samples(s.z[k], lt);
                lj.push_back({{"kappa", kappas[k]},
                              {"estimate", est.estimate},
                              {"se", est.se},
                              {"zero_fraction", est.zero_fraction}});
            }
            out.outputs["lyapunov_quenched"] = lj;
        }
        out.tables.push_back(std::move(table));
    } else {
        throw ConfigError("survival-phase mode must be \"dt\" or \"ct\"");
    }
    return out;
}

RunOutcome run_static_env(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                          int threads) {
    RunOutcome out;
    out.outputs["note"] =
        "exploratory: time-constant environment; no ordering asserted (the concave "
        "comparison is not expected to hold here)";
    const EnvSpec xi = parse_env_spec(require_field(cfg, "xi_spec"));
    std::vector<IncrementDist> walks;
    if (cfg.contains("walks")) {
        for (const auto& w : cfg["walks"]) walks.push_back(parse_walk(w));
    } else {
        // convolution-power family of a base walk
        const IncrementDist base = parse_walk(require_field(cfg, "base_walk"));
        for (const auto& pw : require_field(cfg, "powers"))
            walks.push_back(convolve_power(base, pw.get<int>()));
    }
    const int t = get_int(cfg, "t");
    const std::string mode = cfg.contains("mode") ? cfg["mode"].get<std::string>()
                                                  : std::string("mc");
    CsvTable table{"probes",
                   {"walk", "mean_z", "se", "concave_probe", "convex_probe", "zero_fraction"},
                   {}};
    ordered_json rows = ordered_json::array();
    if (mode == "exact") {
        const uint64_t cap = get_u64_or(cfg, "cap", 10000000);
        const auto laws = static_env_exact_laws(xi, walks, t, cap);
        const double probe = annealed_mean(xi, t);
        for (size_t w = 0; w < laws.size(); ++w) {
            double convex = 0.0;
            for (size_t k = 0; k < laws[w].size(); ++k)
                convex += laws[w].probs()[k] * laws[w].values()[k] * laws[w].values()[k];
            ordered_json r;
            r["walk"] = w;
            r["mean_z"] = laws[w].mean();
            r["concave_probe"] = laws[w].expected_min(probe);
            r["convex_probe"] = convex;
            rows.push_back(r);
            table.rows.push_back({std::to_string(w), fmt(laws[w].mean()), "0",
                                  fmt(laws[w].expected_min(probe)), fmt(convex), "0"});
        }
    } else {
        const uint64_t n = get_u64_or(cfg, "n_env", 20000);
        const auto res = static_env_experiment(xi, walks, t, n,
                                               require_seed(cfg, seed_override), threads);
        for (size_t w = 0; w < res.size(); ++w) {
            ordered_json r;
            r["walk"] = w;
            r["mean_z"] = res[w].mean_z;
            r["se"] = res[w].se_mean;
            r["concave_probe"] = res[w].concave_probe;
            r["convex_probe"] = res[w].convex_probe;
            r["zero_fraction"] = res[w].zero_fraction;
            rows.push_back(r);
            table.rows.push_back({std::to_string(w), fmt(res[w].mean_z), fmt(res[w].se_mean),
                                  fmt(res[w].concave_probe), fmt(res[w].convex_probe),
                                  fmt(res[w].zero_fraction)});
        }
    }
    out.outputs["rows"] = rows;
    out.tables.push_back(std::move(table));
    return out;
}

RunOutcome run_conjecture_scan(const ordered_json& cfg, std::optional<uint64_t> seed_override,
                               int threads) {
    RunOutcome out;
    out.outputs["note"] =
        "exploratory: no acceptance claim; scans symmetric unimodal majorized pairs for "
        "counterexamples to the exact concave comparison";
    const uint64_t seed = require_seed(cfg, seed_override);
    const int K = get_int_or(cfg, "K", 2);
    const int t = get_int_or(cfg, "t", 2);
    const EnvSpec spec = parse_env_spec(require_field(cfg, "env_spec"));
    const int n_pairs = get_int_or(cfg, "pairs", 10);
    const uint64_t cap = get_u64_or(cfg, "cap", 10000000);
    const double tol = get_num_or(cfg, "tol", 1e-10);
    const std::string family = cfg.contains("family") ? cfg["family"].get<std::string>()
                                                      : std::string("random-su");

    Rng rng(seed);
    auto random_su = [&]() {
        // symmetric unimodal on {-K..K}: random non-increasing profile
        std::vector<double> half(static_cast<size_t>(K) + 1);
        double level = 1.0;
        for (auto& h : half) {
            level *= rng.next_double();
            h = level;
        }
        std::vector<int> sites;
        std::vector<double> probs;
        double mass = 0.0;
        for (int i = -K; i <= K; ++i) {
            sites.push_back(i);
            const double w = half[static_cast<size_t>(std::abs(i))];
            probs.push_back(w);
            mass += w;
        }
        for (auto& w : probs) w /= mass;
        return IncrementDist::one_dim(std::move(sites), std::move(probs));
    };
    // next candidate pair with p majorized by q, both symmetric unimodal
    auto next_pair = [&]() -> std::optional<std::pair<IncrementDist, IncrementDist>> {
        if (family == "heavy-tail") {
            // smaller exponent spreads the mass out more
            const double a_hi = 0.3 + 2.7 * rng.next_double();
            const double a_lo = a_hi * (0.2 + 0.75 * rng.next_double());
            const IncrementDist p = heavy_tail_increments(a_lo, K);
            const IncrementDist q = heavy_tail_increments(a_hi, K);
            if (!is_majorized(p, q, 1e-12).majorized) return std::nullopt;
            return std::make_pair(p, q);
        }
        if (family != "random-su")
            throw ConfigError("conjecture-scan family must be \"random-su\" or \"heavy-tail\"");
        const IncrementDist q = random_su();
        // mix towards uniform: stays symmetric unimodal and majorized by q
        const double u = rng.next_double();
        std::vector<double> probs = q.probs();
        for (auto& w : probs)
            w = (1.0 - u) * w + u / static_cast<double>(2 * K + 1);
        const IncrementDist p(1, q.support(), probs);
        if (!is_majorized(p, q, 1e-12).majorized) return std::nullopt;
        if (!is_symmetric_unimodal(p) || !is_symmetric_unimodal(q)) return std::nullopt;
        return std::make_pair(p, q);
    };

    int found = 0, violations = 0;
    ordered_json rows = ordered_json::array();
    CsvTable table{"pairs", {"pair", "ordered", "worst_violation", "mean_gap"}, {}};
    int attempts = 0;
    while (found < n_pairs && attempts < 200 * n_pairs) {
        ++attempts;
        const auto pair = next_pair();
        if (!pair) continue;
        const auto& [p, q] = *pair;
        ++found;
        const JointDist joint = joint_partition_distribution(spec, q, p, t, cap, threads);
        // conjectured direction: Z^q <=_cv Z^p
        const auto rep = concave_order_exact(joint.marginal1(), joint.marginal2(), tol);
        if (!rep.ordered) ++violations;
        ordered_json r;
        r["pair"] = found;
        r["ordered"] = rep.ordered;
        r["worst_violation"] = rep.worst_violation;
        r["mean_gap"] = rep.mean_gap;
        rows.push_back(r);
        table.rows.push_back({std::to_string(found), rep.ordered ? "1" : "0",
                              fmt(rep.worst_violation), fmt(rep.mean_gap)});
    }
    out.outputs["family"] = family;
    out.outputs["pairs_tested"] = found;
    out.outputs["violations"] = violations;
    out.outputs["rows"] = rows;
    out.tables.push_back(std::move(table));
    return out;
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries = {
        {"order-exact", "exact concave-order test between finite laws or a polymer pair",
         "configs/order-exact.json", false, false},
        {"order-empirical", "empirical concave-order comparison with confidence bands",
         "configs/order-empirical.json", false, true},
        {"coupling-check", "pathwise convolution coupling identity over all environments",
         "configs/coupling-check.json", false, false},
        {"majorization", "majorization certificate from descending partial sums",
         "configs/majorization.json", false, false},
        {"tree-theorem", "tree criterion, both directions (mixture + exact enumeration)",
         "configs/tree-theorem.json", false, false},
        {"tree-interpolation", "interpolation ladder sub-checks at each pivot node",
         "configs/tree-interpolation.json", false, true},
        {"polymer-dp", "partition function of a walk in a given or sampled field",
         "configs/polymer-dp.json", false, true},
        {"free-energy", "finite-horizon quenched free-energy estimate",
         "configs/free-energy.json", false, true},
        {"martingale-moment", "fractional moments of the normalized partition function",
         "configs/martingale-moment.json", false, false},
        {"pam-exact", "certified interval for the continuous-time partition function",
         "configs/pam-exact.json", false, true},
        {"pam-mc", "path Monte Carlo for the continuous-time partition function",
         "configs/pam-mc.json", false, true},
        {"pam-ode-crosscheck", "lattice equation solve against the time-reversed interval",
         "configs/pam-ode-crosscheck.json", false, true},
        {"lyapunov", "quenched/annealed Lyapunov estimates over a kappa grid",
         "configs/lyapunov.json", false, true},
        {"brw-dt", "discrete-time branching walk in a sampled offspring field",
         "configs/brw-dt.json", false, true},
        {"brw-ct", "continuous-time branching walk among disasters", "configs/brw-ct.json",
         false, true},
        {"many-to-one", "population mean against the partition function",
         "configs/many-to-one.json", false, true},
        {"survival-phase", "survival frequencies over parameter grids (evidence only)",
         "configs/survival-phase.json", false, true},
        {"static-env", "exploratory: time-constant environment probes",
         "configs/static-env.json", true, true},
        {"conjecture-scan", "exploratory: no acceptance claim; symmetric unimodal pair scan",
         "configs/conjecture-scan.json", true, true},
    };
    return entries;
}

RunOutcome run_subcommand(const std::string& name, const ordered_json& cfg,
                          std::optional<uint64_t> seed_override, int threads) {
    if (name == "order-exact") return run_order_exact(cfg, seed_override, threads);
    if (name == "order-empirical") return run_order_empirical(cfg, seed_override, threads);
    if (name == "coupling-check") return run_coupling_check(cfg, seed_override, threads);
    if (name == "majorization") return run_majorization(cfg, seed_override, threads);
    if (name == "tree-theorem") return run_tree_theorem(cfg, seed_override, threads);
    if (name == "tree-interpolation") return run_tree_interpolation(cfg, seed_override, threads);
    if (name == "polymer-dp") return run_polymer_dp(cfg, seed_override, threads);
    if (name == "free-energy") return run_free_energy(cfg, seed_override, threads);
    if (name == "martingale-moment") return run_martingale_moment(cfg, seed_override, threads);
    if (name == "pam-exact") return run_pam_exact(cfg, seed_override, threads);
    if (name == "pam-mc") return run_pam_mc(cfg, seed_override, threads);
    if (name == "pam-ode-crosscheck")
        return run_pam_ode_crosscheck(cfg, seed_override, threads);
    if (name == "lyapunov") return run_lyapunov(cfg, seed_override, threads);
    if (name == "brw-dt") return run_brw_dt(cfg, seed_override, threads);
    if (name == "brw-ct") return run_brw_ct(cfg, seed_override, threads);
    if (name == "many-to-one") return run_many_to_one(cfg, seed_override, threads);
    if (name == "survival-phase") return run_survival_phase(cfg, seed_override, threads);
    if (name == "static-env") return run_static_env(cfg, seed_override, threads);
    if (name == "conjecture-scan") return run_conjecture_scan(cfg, seed_override, threads);
    throw ConfigError("unknown subcommand \"" + name + "\" (see `list`)");
}

}  // namespace rwre::cli
