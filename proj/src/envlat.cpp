#include "rwre/envlat.hpp"

#include <algorithm>
#include <cmath>

namespace rwre {

namespace {
constexpr double kMassTol = 1e-12;
}

// ---------------------------------------------------------------------------
// EnvSpec

EnvSpec::EnvSpec(std::vector<EnvAtom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ConfigError("environment spec needs at least one atom");
    double mass = 0.0, mf = 0.0;
    for (const auto& a : atoms_) {
        if (!(a.value >= -1.0)) throw ConfigError("environment value below -1");
        if (a.prob < 0.0 || a.prob > 1.0) throw ConfigError("atom probability outside [0,1]");
        mass += a.prob;
        mf += a.prob * (1.0 + a.value);
        probs_.push_back(a.prob);
    }
    if (std::abs(mass - 1.0) > kMassTol)
        throw ConfigError("atom probabilities sum to " + std::to_string(mass) + ", expected 1");
    if (!std::isfinite(mf)) throw ConfigError("mean factor not finite");
    mean_factor_ = mf;
}

double EnvSpec::sample_value(Rng& rng) const { return atoms_[sample_index(rng)].value; }

size_t EnvSpec::sample_index(Rng& rng) const { return rng.discrete(probs_); }

bool EnvSpec::has_hard_obstacles() const {
    for (const auto& a : atoms_)
        if (a.value <= -1.0 && a.prob > 0.0) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Windows

LatticeWindow reach_window(const std::vector<Site>& steps, int t) {
    if (steps.empty()) throw ConfigError("reach_window: empty step set");
    LatticeWindow w;
    Box b = Box::single(origin_site(static_cast<int>(steps.front().size())));
    for (int s = 1; s <= t; ++s) {
        b = b.minkowski_hull(steps);
        w.slices.push_back(b);
    }
    return w;
}

LatticeWindow union_window(const LatticeWindow& a, const LatticeWindow& b) {
    if (a.horizon() != b.horizon()) throw ConfigError("union_window: horizon mismatch");
    LatticeWindow out;
    for (int s = 0; s < a.horizon(); ++s) {
        const Box& ba = a.slices[static_cast<size_t>(s)];
        const Box& bb = b.slices[static_cast<size_t>(s)];
        Site lo(ba.lo.size()), hi(ba.lo.size());
        for (size_t k = 0; k < ba.lo.size(); ++k) {
            lo[k] = std::min(ba.lo[k], bb.lo[k]);
            hi[k] = std::max(ba.hi[k], bb.hi[k]);
        }
        out.slices.emplace_back(lo, hi);
    }
    return out;
}

// ---------------------------------------------------------------------------
// LatticeField

LatticeField::LatticeField(int horizon, LatticeWindow window, double default_value)
    : horizon_(horizon), window_(std::move(window)), default_value_(default_value) {
    if (horizon_ < 0) throw ConfigError("negative horizon");
    if (window_.horizon() != horizon_) throw ConfigError("window horizon mismatch");
    values_.reserve(window_.slices.size());
    for (const auto& b : window_.slices) {
        if (b.size() == 0) throw ConfigError("empty window slice");
        values_.emplace_back(b.size(), 0.0);
    }
}

bool LatticeField::in_window(int s, const Site& i) const {
    if (s < 1 || s > horizon_) return false;
    return window_.slices[static_cast<size_t>(s - 1)].contains(i);
}

double LatticeField::at(int s, const Site& i) const {
    if (!in_window(s, i))
        throw WindowError("field lookup outside window at s=" + std::to_string(s) + " i=" +
                          site_to_string(i));
    const Box& b = window_.slices[static_cast<size_t>(s - 1)];
    return values_[static_cast<size_t>(s - 1)][b.index(i)];
}

double LatticeField::at_or_default(int s, const Site& i) const {
    if (!in_window(s, i)) return default_value_;
    const Box& b = window_.slices[static_cast<size_t>(s - 1)];
    return values_[static_cast<size_t>(s - 1)][b.index(i)];
}

void LatticeField::set(int s, const Site& i, double value) {
    if (!in_window(s, i)) throw WindowError("field write outside window");
    if (!(value >= -1.0)) throw ConfigError("field value below -1");
    const Box& b = window_.slices[static_cast<size_t>(s - 1)];
    values_[static_cast<size_t>(s - 1)][b.index(i)] = value;
}

LatticeField sample_lattice_field(const EnvSpec& spec, int horizon, const LatticeWindow& window,
                                  uint64_t seed) {
    LatticeField field(horizon, window);
    Rng rng(seed);
    for (int s = 1; s <= horizon; ++s) {
        auto& vals = field.slice_values(s);
        for (auto& v : vals) v = spec.sample_value(rng);
    }
    return field;
}

uint64_t enumeration_size(const EnvSpec& spec, const LatticeWindow& window, uint64_t cap) {
    const uint64_t cells = window.cell_count();
    const uint64_t m = spec.atom_count();
    uint64_t n = 1;
    for (uint64_t c = 0; c < cells; ++c) {
        if (n > cap / m + 1) {
            throw ResourceError("instance too large: " + std::to_string(m) + "^" +
                                std::to_string(cells) + " environment configurations exceed cap " +
                                std::to_string(cap));
        }
        n *= m;
    }
    if (n > cap)
        throw ResourceError("instance too large: " + std::to_string(n) +
                            " environment configurations exceed cap " + std::to_string(cap));
    return n;
}

LatticeField decode_lattice_config(const EnvSpec& spec, int horizon, const LatticeWindow& window,
                                   uint64_t index, double* prob_out) {
    LatticeField field(horizon, window);
    decode_lattice_config_into(spec, index, field, prob_out);
    return field;
}

void decode_lattice_config_into(const EnvSpec& spec, uint64_t index, LatticeField& field,
                                double* prob_out) {
    const uint64_t m = spec.atom_count();
    double prob = 1.0;
    for (int s = 1; s <= field.horizon(); ++s) {
        auto& vals = field.slice_values(s);
        for (auto& v : vals) {
            const size_t a = static_cast<size_t>(index % m);
            index /= m;
            v = spec.atoms()[a].value;
            prob *= spec.atoms()[a].prob;
        }
    }
    if (prob_out) *prob_out = prob;
}

void enumerate_lattice_fields(const EnvSpec& spec, int horizon, const LatticeWindow& window,
                              uint64_t cap,
                              const std::function<void(const LatticeField&, double)>& fn) {
    const uint64_t n = enumeration_size(spec, window, cap);
    for (uint64_t k = 0; k < n; ++k) {
        double prob = 0.0;
        LatticeField f = decode_lattice_config(spec, horizon, window, k, &prob);
        fn(f, prob);
    }
}

LatticeField shift_lattice(const LatticeField& field, const LatticePath& x) {
    if (static_cast<int>(x.size()) != field.horizon() + 1)
        throw ConfigError("shift path must have length horizon+1 (positions x_0..x_t)");
    LatticeWindow out_window;
    for (int s = 1; s <= field.horizon(); ++s)
        out_window.slices.push_back(
            field.window().slices[static_cast<size_t>(s - 1)].shifted(x[static_cast<size_t>(s)]));
    LatticeField out(field.horizon(), out_window, field.default_value());
    for (int s = 1; s <= field.horizon(); ++s) {
        const Box& b = out_window.slices[static_cast<size_t>(s - 1)];
        auto& vals = out.slice_values(s);
        for (uint64_t idx = 0; idx < b.size(); ++idx) {
            // strict: the source cell must be stored
            vals[idx] = field.at(s, add_sites(b.site(idx), x[static_cast<size_t>(s)]));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// MarkSet

MarkSet::MarkSet(double horizon, int dim, int box_radius, std::vector<MarkPoint> marks,
                 double rate, std::optional<MarkLaw> law)
    : horizon_(horizon),
      dim_(dim),
      box_radius_(box_radius),
      marks_(std::move(marks)),
      rate_(rate),
      law_(std::move(law)) {
    if (horizon_ <= 0.0) throw ConfigError("mark set horizon must be positive");
    if (dim_ < 1) throw ConfigError("mark set dimension must be >= 1");
    if (box_radius_ < 0) throw ConfigError("mark set box radius must be >= 0");
    const Box box = Box::centered(dim_, box_radius_);
    for (const auto& m : marks_) {
        if (m.time < 0.0 || m.time > horizon_) throw ConfigError("mark time outside [0, horizon]");
        if (!(m.value >= -1.0)) throw ConfigError("mark value below -1");
        if (static_cast<int>(m.site.size()) != dim_) throw ConfigError("mark site dimension");
        if (!box.contains(m.site)) throw ConfigError("mark site outside box");
    }
    std::sort(marks_.begin(), marks_.end(),
              [](const MarkPoint& a, const MarkPoint& b) { return a.time < b.time; });
    for (size_t k = 1; k < marks_.size(); ++k)
        if (marks_[k].time == marks_[k - 1].time)
            throw ConfigError("mark times must be pairwise distinct");
}

double MarkSet::bonus_weight_bound() const {
    double b = 1.0;
    for (const auto& m : marks_)
        if (m.value > 0.0) b *= 1.0 + m.value;
    return b;
}

MarkSet MarkSet::time_reversed() const {
    std::vector<MarkPoint> rev;
    rev.reserve(marks_.size());
    for (const auto& m : marks_) rev.push_back({horizon_ - m.time, m.site, m.value});
    return MarkSet(horizon_, dim_, box_radius_, std::move(rev), rate_, law_);
}

MarkSet sample_mark_set(double rate, const MarkLaw& rho, double horizon, int box_radius, int dim,
                        uint64_t seed) {
    if (rate <= 0.0) throw ConfigError("mark intensity rate must be positive");
    const Box box = Box::centered(dim, box_radius);
    Rng rng(seed);
    std::vector<MarkPoint> marks;
    for (uint64_t idx = 0; idx < box.size(); ++idx) {
        const Site site = box.site(idx);
        const uint64_t count = rng.poisson(rate * horizon);
        for (uint64_t k = 0; k < count; ++k)
            marks.push_back({horizon * rng.next_double(), site, rho.sample_value(rng)});
    }
    // ties across the whole set occur with probability zero; redraw if the
    // double-precision samples ever collide so construction cannot reject
    std::sort(marks.begin(), marks.end(),
              [](const MarkPoint& a, const MarkPoint& b) { return a.time < b.time; });
    for (size_t k = 1; k < marks.size(); ++k)
        while (marks[k].time == marks[k - 1].time)
            marks[k].time = horizon * rng.next_double();
    return MarkSet(horizon, dim, box_radius, std::move(marks), rate, rho);
}

// ---------------------------------------------------------------------------
// TreeEnv

TreeEnv::TreeEnv(int arity, int depth) : arity_(arity), depth_(depth) {
    if (arity_ < 2) throw ConfigError("tree arity must be >= 2");
    if (depth_ < 1) throw ConfigError("tree depth must be >= 1");
    uint64_t level = 1;
    for (int l = 1; l <= depth_; ++l) {
        level *= static_cast<uint64_t>(arity_);
        values_.emplace_back(level, 0.0);
    }
}

double TreeEnv::at(const TreeNodeId& v) const {
    if (v.depth < 1 || v.depth > depth_) throw WindowError("tree lookup outside depth range");
    return values_[static_cast<size_t>(v.depth - 1)][v.index];
}

void TreeEnv::set(const TreeNodeId& v, double value) {
    if (v.depth < 1 || v.depth > depth_) throw WindowError("tree write outside depth range");
    if (!(value >= -1.0)) throw ConfigError("tree value below -1");
    values_[static_cast<size_t>(v.depth - 1)][v.index] = value;
}

uint64_t TreeEnv::cell_count() const {
    uint64_t n = 0;
    for (const auto& lv : values_) n += lv.size();
    return n;
}

TreeEnv sample_tree_env(const EnvSpec& spec, int arity, int depth, uint64_t seed) {
    TreeEnv env(arity, depth);
    Rng rng(seed);
    for (int l = 1; l <= depth; ++l)
        for (auto& v : env.level_values(l)) v = spec.sample_value(rng);
    return env;
}

uint64_t tree_enumeration_size(const EnvSpec& spec, int arity, int depth, uint64_t cap) {
    TreeEnv probe(arity, depth);
    const uint64_t cells = probe.cell_count();
    const uint64_t m = spec.atom_count();
    uint64_t n = 1;
    for (uint64_t c = 0; c < cells; ++c) {
        if (n > cap / m + 1)
            throw ResourceError("tree enumeration exceeds cap " + std::to_string(cap));
        n *= m;
    }
    if (n > cap) throw ResourceError("tree enumeration exceeds cap " + std::to_string(cap));
    return n;
}

TreeEnv decode_tree_config(const EnvSpec& spec, int arity, int depth, uint64_t index,
                           double* prob_out) {
    TreeEnv env(arity, depth);
    const uint64_t m = spec.atom_count();
    double prob = 1.0;
    for (int l = 1; l <= depth; ++l) {
        for (auto& v : env.level_values(l)) {
            const size_t a = static_cast<size_t>(index % m);
            index /= m;
            v = spec.atoms()[a].value;
            prob *= spec.atoms()[a].prob;
        }
    }
    if (prob_out) *prob_out = prob;
    return env;
}

TreeEnv apply_elementary_shift(const TreeEnv& env, const TreeNodeId& v,
                               const std::vector<int>& perm) {
    const int K = env.arity();
    if (v.depth < 0 || v.depth >= env.depth())
        throw ConfigError("elementary shift node must have depth < tree depth");
    if (static_cast<int>(perm.size()) != K) throw ConfigError("permutation arity mismatch");
    std::vector<bool> seen(static_cast<size_t>(K), false);
    for (int a : perm) {
        if (a < 0 || a >= K || seen[static_cast<size_t>(a)])
            throw ConfigError("not a permutation of {0..K-1}");
        seen[static_cast<size_t>(a)] = true;
    }
    TreeEnv out = env;
    // descendants of v at level l occupy the contiguous index block
    // [v.index * K^(l - v.depth), ...); child a owns the sub-block a
    for (int l = v.depth + 1; l <= env.depth(); ++l) {
        const uint64_t sub = tree_level_size(K, l - v.depth - 1);  // block per child
        const uint64_t base = v.index * tree_level_size(K, l - v.depth);
        const auto& src = env.level_values(l);
        auto& dst = out.level_values(l);
        for (int a = 0; a < K; ++a) {
            const uint64_t from = base + static_cast<uint64_t>(perm[static_cast<size_t>(a)]) * sub;
            const uint64_t to = base + static_cast<uint64_t>(a) * sub;
            for (uint64_t k = 0; k < sub; ++k) dst[to + k] = src[from + k];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// OffspringSpec / OffspringField

OffspringSpec::OffspringSpec(std::vector<OffspringAtom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ConfigError("offspring spec needs at least one atom");
    double mass = 0.0;
    for (const auto& a : atoms_) {
        if (a.law.empty()) throw ConfigError("empty offspring law");
        double law_mass = 0.0, mean = 0.0;
        for (size_t k = 0; k < a.law.size(); ++k) {
            if (a.law[k] < 0.0) throw ConfigError("negative offspring probability");
            law_mass += a.law[k];
            mean += static_cast<double>(k) * a.law[k];
        }
        if (std::abs(law_mass - 1.0) > kMassTol)
            throw ConfigError("offspring law does not sum to 1");
        if (a.prob < 0.0 || a.prob > 1.0) throw ConfigError("atom probability outside [0,1]");
        mass += a.prob;
        means_.push_back(mean);
    }
    if (std::abs(mass - 1.0) > kMassTol)
        throw ConfigError("offspring atom probabilities do not sum to 1");
}

EnvSpec OffspringSpec::induced_env_spec() const {
    std::vector<EnvAtom> atoms;
    for (size_t i = 0; i < atoms_.size(); ++i)
        atoms.push_back({means_[i] - 1.0, atoms_[i].prob});
    return EnvSpec(std::move(atoms));
}

size_t OffspringSpec::sample_index(Rng& rng) const {
    std::vector<double> probs;
    probs.reserve(atoms_.size());
    for (const auto& a : atoms_) probs.push_back(a.prob);
    return rng.discrete(probs);
}

OffspringField::OffspringField(const OffspringSpec& spec, int horizon, LatticeWindow window,
                               uint64_t seed)
    : spec_(&spec), horizon_(horizon), window_(std::move(window)) {
    if (window_.horizon() != horizon_) throw ConfigError("offspring field horizon mismatch");
    Rng rng(seed);
    for (const auto& b : window_.slices) {
        std::vector<uint32_t> slice(b.size());
        for (auto& a : slice) a = static_cast<uint32_t>(spec.sample_index(rng));
        atom_idx_.push_back(std::move(slice));
    }
}

size_t OffspringField::atom_at(int s, const Site& i) const {
    if (s < 1 || s > horizon_) throw WindowError("offspring lookup outside horizon");
    const Box& b = window_.slices[static_cast<size_t>(s - 1)];
    if (!b.contains(i)) throw WindowError("offspring lookup outside window");
    return atom_idx_[static_cast<size_t>(s - 1)][b.index(i)];
}

LatticeField OffspringField::induced_field() const {
    LatticeField field(horizon_, window_);
    for (int s = 1; s <= horizon_; ++s) {
        const auto& idx = atom_idx_[static_cast<size_t>(s - 1)];
        auto& vals = field.slice_values(s);
        for (size_t k = 0; k < idx.size(); ++k) vals[k] = spec_->atom_mean(idx[k]) - 1.0;
    }
    return field;
}

}  // namespace rwre
