#pragma once

#include "modso/error_bounds.hpp"
#include "modso/nav_env.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace modso {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Raised for malformed or unknown configuration entries.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Run configuration. Every field has a default, so an empty file is valid.
 *
 * Text form: one `section.key = value` per line, `#` comments, unknown keys
 * rejected.
 */
struct RunConfig {
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
    std::optional<std::filesystem::path> geometry_path;

    nav::NavConfig env;

    struct SelfOrg {
        std::size_t modules = 3;
        std::size_t budget = 400;
        std::size_t max_sweeps = 40;
        /// no early stop unless set
        double tol = -std::numeric_limits<double>::infinity();
        std::size_t warmup_splits = 2;
        BoundVariant bound_variant = BoundVariant::AsWritten;
        std::size_t splits_per_call = 1;
        std::size_t learn_steps_per_pick = 1;
        double bound_tol = 1e-6;
        InfluenceWeight influence_weight = InfluenceWeight::Macro;
    } so;

    struct Eval {
        std::size_t runs = 500;
        std::size_t cap = 1000;
        PolicyKind policy = PolicyKind::Lifted;
    } eval;

    struct Solve {
        double tol = 1e-8;
        std::size_t max_iter = 100000;
    } solve;

    struct ClusterDemo {
        std::size_t blobs = 2;
        std::size_t points_per_blob = 5;
        double spread = 0.5;
        double separation = 10.0;
        std::size_t m = 2;
        double eta = 0.1;
        std::size_t max_iter = 100;
        std::size_t max_sweeps = 200;
        double tol = 1e-9;
    } cluster;
};

RunConfig parse_config(std::string_view text, std::string_view origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `section.key = value` assignment; throws ConfigError on unknown keys or bad values.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Every key in sorted order, one `key = value` per line.
std::string canonical_text(const RunConfig& cfg);
/// FNV-1a 64 of canonical_text with the output directory blanked, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Geometry from `geometry_path`, or the default one.
nav::NavGeometry resolve_geometry(const RunConfig& cfg);

} // namespace modso
