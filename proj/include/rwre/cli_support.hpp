#pragma once

// Experiment runner support: JSON <-> domain-type parsing, subcommand
// dispatch, the experiment catalog, and CSV table emission. The CLI binary
// is a thin wrapper around run_subcommand().

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rwre/branching.hpp"
#include "rwre/envlat.hpp"
#include "rwre/increments.hpp"
#include "rwre/pam_ct.hpp"
#include "rwre/polymer_dt.hpp"
#include "rwre/stochorder.hpp"
#include "rwre/treepoly.hpp"

namespace rwre::cli {

using ordered_json = nlohmann::ordered_json;

struct CsvTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct RunOutcome {
    ordered_json outputs;
    std::optional<bool> pass;  // absent for estimate-only subcommands
    std::vector<CsvTable> tables;
};

struct CatalogEntry {
    std::string name;
    std::string description;
    std::string sample_config;  // repo-relative path
    bool exploratory = false;
    bool stochastic = true;  // requires a seed
};

const std::vector<CatalogEntry>& catalog();

/// Dispatches one experiment. `seed_override`, when set, replaces the
/// config seed; stochastic subcommands fail without one. Throws ConfigError
/// for schema violations and ResourceError for cap violations.
RunOutcome run_subcommand(const std::string& name, const ordered_json& cfg,
                          std::optional<uint64_t> seed_override, int threads);

/// Schema-checked field access (throws ConfigError with the field name).
const ordered_json& require_field(const ordered_json& cfg, const std::string& key);

// Parsers for the shared JSON shapes.
EnvSpec parse_env_spec(const ordered_json& j);
IncrementDist parse_walk(const ordered_json& j);
TreeIncrementDist parse_tree_law(const ordered_json& j, int arity);
OffspringSpec parse_offspring_spec(const ordered_json& j);
MarkSet parse_mark_set(const ordered_json& j, std::optional<uint64_t> seed_override);
FiniteDist parse_finite_dist(const ordered_json& j);

std::string csv_to_string(const CsvTable& table);

}  // namespace rwre::cli
