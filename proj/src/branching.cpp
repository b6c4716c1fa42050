#include "rwre/branching.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace rwre {

// ---------------------------------------------------------------------------
// Hashed offspring field

HashedOffspringView::HashedOffspringView(const OffspringSpec& spec, uint64_t seed)
    : spec_(&spec), seed_(seed) {
    double acc = 0.0;
    for (const auto& a : spec.atoms()) {
        acc += a.prob;
        cum_.push_back(acc);
    }
}

size_t HashedOffspringView::atom_at(int s, const Site& i) const {
    uint64_t h = seed_;
    h = splitmix64(h ^ (0x243f6a8885a308d3ULL * (static_cast<uint64_t>(s) + 1)));
    for (int c : i)
        h = splitmix64(h ^ (static_cast<uint64_t>(static_cast<int64_t>(c)) +
                            0x13198a2e03707344ULL));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    for (size_t k = 0; k + 1 < cum_.size(); ++k)
        if (u < cum_[k]) return k;
    return cum_.size() - 1;
}

// ---------------------------------------------------------------------------
// Discrete-time simulation

BRWStateDT simulate_brw_dt(const OffspringFieldView& eta, const IncrementDist& p, int t,
                           uint64_t seed, uint64_t pop_cap) {
    Rng rng(seed);
    BRWStateDT state;
    state.counts[origin_site(p.dim())] = 1;
    for (int s = 1; s <= t; ++s) {
        std::map<Site, long long> next;
        long long total = 0;
        for (const auto& [site, count] : state.counts) {
            for (long long c = 0; c < count; ++c) {
                const Site dest = add_sites(site, p.support()[p.sample_index(rng)]);
                const auto& law = eta.spec().atoms()[eta.atom_at(s, dest)].law;
                const size_t k = rng.discrete(law);
                if (k > 0) {
                    next[dest] += static_cast<long long>(k);
                    total += static_cast<long long>(k);
                }
            }
        }
        state.counts = std::move(next);
        state.generation = s;
        if (static_cast<uint64_t>(total) > pop_cap) {
            state.capped = true;
            return state;
        }
        if (total == 0) break;  // extinct
    }
    state.generation = t;
    return state;
}

ManyToOneReportDT many_to_one_check_dt(const OffspringSpec& spec, const IncrementDist& p, int t,
                                       uint64_t n, uint64_t seed, int threads) {
    const LatticeWindow window = reach_window(p.support(), t);
    const OffspringField field(spec, t, window, substream_seed(seed, 0));
    const DenseOffspringView view(field);

    std::vector<double> totals(n);
    std::vector<uint8_t> capped(n, 0);
    for_each_block(n, 512, threads, [&](uint64_t, uint64_t lo, uint64_t hi) {
        for (uint64_t i = lo; i < hi; ++i) {
            const BRWStateDT st = simulate_brw_dt(view, p, t, substream_seed(seed, i + 1));
            totals[i] = static_cast<double>(st.total());
            capped[i] = st.capped ? 1 : 0;
        }
    });
    ManyToOneReportDT rep;
    const MeanSE ms = mean_se(totals);
    rep.mc_mean = ms.mean;
    rep.mc_se = ms.se;
    rep.n = n;
    rep.exact_z = partition_function(field.induced_field(), p, t).value;
    rep.deviation_sigmas =
        ms.se > 0.0 ? std::abs(ms.mean - rep.exact_z) / ms.se
                    : (ms.mean == rep.exact_z ? 0.0 : std::numeric_limits<double>::infinity());
    for (uint8_t c : capped)
        if (c) rep.any_capped = true;
    return rep;
}

std::vector<SurvivalReportDT> survival_experiment_dt(const OffspringSpec& spec,
                                                     const std::vector<IncrementDist>& walks,
                                                     int T, uint64_t n, uint64_t seed,
                                                     uint64_t pop_cap, uint64_t fe_n_env,
                                                     int fe_t, int threads) {
    if (walks.empty()) throw ConfigError("need at least one walk");
    std::vector<std::vector<double>> survived(walks.size(), std::vector<double>(n, 0.0));
    std::vector<std::vector<uint8_t>> capped(walks.size(), std::vector<uint8_t>(n, 0));
    for_each_block(n, 64, threads, [&](uint64_t, uint64_t lo, uint64_t hi) {
        for (uint64_t i = lo; i < hi; ++i) {
            // environment seed shared across walks; branching streams distinct
            const HashedOffspringView env(spec, substream_seed(seed, 2 * i));
            for (size_t w = 0; w < walks.size(); ++w) {
                const BRWStateDT st = simulate_brw_dt(
                    env, walks[w], T, substream_seed(seed, 2 * i + 1) ^ (w * 0x9e3779b9ULL),
                    pop_cap);
                const bool alive = st.capped || st.total() > 0;
                survived[w][i] = alive ? 1.0 : 0.0;
                capped[w][i] = st.capped ? 1 : 0;
            }
        }
    });
    std::vector<SurvivalReportDT> out(walks.size());
    const EnvSpec env_spec = spec.induced_env_spec();
    for (size_t w = 0; w < walks.size(); ++w) {
        const MeanSE ms = mean_se(survived[w]);
        out[w].survival_frequency = ms.mean;
        out[w].frequency_se = ms.se;
        out[w].n = n;
        uint64_t nc = 0;
        for (uint8_t c : capped[w]) nc += c;
        out[w].capped_fraction = static_cast<double>(nc) / static_cast<double>(n);
        out[w].free_energy =
            free_energy_estimate(env_spec, walks[w], fe_t, fe_n_env, substream_seed(seed, 1),
                                 threads);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Continuous-time simulation (quenched mark set)

CTBranchResult simulate_brw_ct(const MarkSet& marks, const CTBranchParams& params, uint64_t seed,
                               uint64_t pop_cap, bool log_events) {
    if (params.horizon <= 0.0) throw ConfigError("horizon must be positive");
    if (params.kappa < 0.0 || params.lambda < 0.0) throw ConfigError("rates must be >= 0");
    for (const auto& m : marks.marks())
        if (m.value > 0.0)
            throw ConfigError(
                "continuous-time branching supports disaster/thinning marks (r <= 0) only");
    Rng rng(seed);
    CTBranchResult res;

    const int d = marks.dim();
    std::vector<Site> pos = {origin_site(d)};
    std::vector<long long> ids = {0};
    long long next_id = 1;

    double now = 0.0;
    size_t mark_idx = 0;
    const auto& ms = marks.marks();
    const double per_particle = params.kappa + params.lambda;

    while (now < params.horizon && !pos.empty()) {
        const double total_rate = per_particle * static_cast<double>(pos.size());
        double next_event =
            total_rate > 0.0 ? now + rng.exponential(total_rate) : params.horizon + 1.0;
        // skip marks beyond the horizon
        while (mark_idx < ms.size() && ms[mark_idx].time > params.horizon) ++mark_idx;
        const bool mark_first = mark_idx < ms.size() && ms[mark_idx].time <= next_event;
        if (mark_first) {
            const MarkPoint& m = ms[mark_idx++];
            now = m.time;
            // r = -1 kills everything at the site; r in (-1, 0) thins
            // survivors independently with probability 1+r
            if (m.value < 0.0) {
                long long killed = 0;
                for (size_t k = pos.size(); k-- > 0;) {
                    if (pos[k] != m.site) continue;
                    const double keep = 1.0 + m.value;
                    if (keep <= 0.0 || rng.next_double() >= keep) {
                        ++killed;
                        pos[k] = pos.back();
                        ids[k] = ids.back();
                        pos.pop_back();
                        ids.pop_back();
                    }
                }
                if (log_events && killed > 0)
                    res.events.push_back(
                        {now, CTEventType::Disaster, m.site, -1, -1, -1, killed});
            }
            continue;
        }
        if (next_event > params.horizon) break;
        now = next_event;
        const size_t k = static_cast<size_t>(rng.next_below(pos.size()));
        const bool is_jump = rng.next_double() < params.kappa / per_particle;
        if (is_jump) {
            const uint64_t dir = rng.next_below(2 * static_cast<uint64_t>(d));
            Site to = pos[k];
            to[dir >> 1] += (dir & 1) ? 1 : -1;
            if (log_events)
                res.events.push_back({now, CTEventType::Jump, to, ids[k], -1, -1, 0});
            pos[k] = to;
        } else {
            const long long parent = ids[k];
            const long long a = next_id++, b = next_id++;
            ids[k] = a;
            pos.push_back(pos[k]);
            ids.push_back(b);
            if (log_events)
                res.events.push_back({now, CTEventType::Branch, pos[k], parent, a, b, 0});
            if (pos.size() > pop_cap) {
                res.capped = true;
                break;
            }
        }
    }
    for (size_t k = 0; k < pos.size(); ++k) ++res.counts[pos[k]];
    res.alive = static_cast<long long>(pos.size());
    return res;
}

ManyToOneReportCT many_to_one_check_ct(const MarkSet& marks, const CTBranchParams& params,
                                       uint64_t n, double eps, uint64_t seed, int threads) {
    std::vector<double> totals(n);
    std::vector<uint8_t> capped(n, 0);
    for_each_block(n, 512, threads, [&](uint64_t, uint64_t lo, uint64_t hi) {
        for (uint64_t i = lo; i < hi; ++i) {
            const CTBranchResult r = simulate_brw_ct(marks, params, substream_seed(seed, i));
            totals[i] = static_cast<double>(r.alive);
            capped[i] = r.capped ? 1 : 0;
        }
    });
    const IntervalEstimate z = ct_partition_exact(marks, params.kappa, params.horizon, eps);
    const double growth = std::exp(params.lambda * params.horizon);
    ManyToOneReportCT rep;
    const MeanSE msse = mean_se(totals);
    rep.mc_mean = msse.mean;
    rep.mc_se = msse.se;
    rep.exact_lo = growth * z.lo;
    rep.exact_hi = growth * z.hi;
    rep.n = n;
    rep.within = msse.mean >= rep.exact_lo - 3.0 * msse.se &&
                 msse.mean <= rep.exact_hi + 3.0 * msse.se;
    for (uint8_t c : capped)
        if (c) rep.any_capped = true;
    return rep;
}

// ---------------------------------------------------------------------------
// Continuous-time survival with a lazily realized disaster cloud. A site's
// clock is drawn fresh whenever the site becomes occupied; by memorylessness
// of the Poisson process this is exact in law.

namespace {

struct LazyDisasterSim {
    double rate;
    Rng* rng;
    std::map<Site, std::pair<long long, double>> occupied;  // site -> (count, next time)
    using QueueEntry = std::pair<double, Site>;
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> queue;

    void occupy(const Site& s, double now) {
        auto it = occupied.find(s);
        if (it == occupied.end()) {
            const double next = now + rng->exponential(rate);
            occupied.emplace(s, std::make_pair(1LL, next));
            queue.emplace(next, s);
        } else {
            ++it->second.first;
        }
    }
    void vacate_one(const Site& s) {
        auto it = occupied.find(s);
        if (it == occupied.end()) return;
        if (--it->second.first <= 0) occupied.erase(it);  // queue entry goes stale
    }
    /// Earliest valid disaster time, or +inf.
    double next_time() {
        while (!queue.empty()) {
            const auto& [time, site] = queue.top();
            const auto it = occupied.find(site);
            if (it != occupied.end() && it->second.second == time) return time;
            queue.pop();
        }
        return std::numeric_limits<double>::infinity();
    }
};

bool survives_ct(double disaster_rate, double kappa, double lambda, double T, uint64_t pop_cap,
                 int dim, uint64_t seed, bool* capped_out) {
    Rng rng(seed);
    LazyDisasterSim env{disaster_rate, &rng, {}, {}};
    std::vector<Site> pos = {origin_site(dim)};
    env.occupy(pos[0], 0.0);
    double now = 0.0;
    const double per_particle = kappa + lambda;
    *capped_out = false;
    while (now < T && !pos.empty()) {
        const double total_rate = per_particle * static_cast<double>(pos.size());
        const double event_t = total_rate > 0.0 ? now + rng.exponential(total_rate)
                                                : std::numeric_limits<double>::infinity();
        const double disaster_t = env.next_time();
        if (disaster_t <= event_t) {
            if (disaster_t > T) break;
            now = disaster_t;
            const Site site = env.queue.top().second;
            env.queue.pop();
            env.occupied.erase(site);
            for (size_t k = pos.size(); k-- > 0;) {
                if (pos[k] == site) {
                    pos[k] = pos.back();
                    pos.pop_back();
                }
            }
            continue;
        }
        if (event_t > T) break;
        now = event_t;
        const size_t k = static_cast<size_t>(rng.next_below(pos.size()));
        if (rng.next_double() < kappa / per_particle) {
            const uint64_t dir = rng.next_below(2 * static_cast<uint64_t>(dim));
            Site to = pos[k];
            to[dir >> 1] += (dir & 1) ? 1 : -1;
            env.vacate_one(pos[k]);
            env.occupy(to, now);
            pos[k] = to;
        } else {
            env.occupy(pos[k], now);
            pos.push_back(pos[k]);
            if (pos.size() > pop_cap) {
                *capped_out = true;
                return true;  // still growing at the cap: counted as survived
            }
        }
    }
    return !pos.empty();
}

}  // namespace

std::vector<SurvivalCellCT> survival_experiment_ct(double disaster_rate,
                                                   const std::vector<double>& kappas,
                                                   const std::vector<double>& lambdas, double T,
                                                   uint64_t n, uint64_t seed, uint64_t pop_cap,
                                                   int dim, int threads) {
    if (disaster_rate <= 0.0) throw ConfigError("disaster rate must be positive");
    std::vector<SurvivalCellCT> cells;
    for (double lambda : lambdas)
        for (double kappa : kappas) cells.push_back({kappa, lambda, 0.0, 0.0, 0.0});

    std::vector<std::vector<double>> alive(cells.size(), std::vector<double>(n, 0.0));
    std::vector<std::vector<uint8_t>> capped(cells.size(), std::vector<uint8_t>(n, 0));
    for_each_block(n, 64, threads, [&](uint64_t, uint64_t lo, uint64_t hi) {
        for (uint64_t i = lo; i < hi; ++i) {
            for (size_t c = 0; c < cells.size(); ++c) {
                // common replica substreams across cells (paired comparison)
                bool was_capped = false;
                const bool ok =
                    survives_ct(disaster_rate, cells[c].kappa, cells[c].lambda, T, pop_cap, dim,
                                substream_seed(seed, i) ^ (0x517cc1b727220a95ULL * c),
                                &was_capped);
                alive[c][i] = ok ? 1.0 : 0.0;
                capped[c][i] = was_capped ? 1 : 0;
            }
        }
    });
    for (size_t c = 0; c < cells.size(); ++c) {
        const MeanSE msse = mean_se(alive[c]);
        cells[c].survival_frequency = msse.mean;
        cells[c].frequency_se = msse.se;
        uint64_t nc = 0;
        for (uint8_t x : capped[c]) nc += x;
        cells[c].capped_fraction = static_cast<double>(nc) / static_cast<double>(n);
    }
    return cells;
}

}  // namespace rwre
