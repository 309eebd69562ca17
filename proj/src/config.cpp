#include "modso/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace modso {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class Int>
Int parse_int(std::string_view key, std::string_view value) {
    Int out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, value));
    return out;
}

double parse_double(std::string_view key, std::string_view value) {
    try {
        std::size_t used = 0;
        const std::string text(value);
        const double out = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("{}: '{}' is not a number", key, value));
    }
}

struct Entry {
    std::string_view key;
    std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class Member>
Entry size_entry(std::string_view key, Member member) {
    return {key, [member](RunConfig& c, std::string_view k, std::string_view v) { member(c) = parse_int<std::size_t>(k, v); },
            [member](const RunConfig& c) { return fmt::format("{}", member(c)); }};
}

template <class Member>
Entry double_entry(std::string_view key, Member member) {
    return {key, [member](RunConfig& c, std::string_view k, std::string_view v) { member(c) = parse_double(k, v); },
            [member](const RunConfig& c) { return fmt::format("{}", member(c)); }};
}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = [] {
        std::vector<Entry> t;
        t.push_back({"run.seed", [](RunConfig& c, std::string_view k, std::string_view v) { c.seed = parse_int<std::uint64_t>(k, v); },
                     [](const RunConfig& c) { return fmt::format("{}", c.seed); }});
        t.push_back({"run.output_dir", [](RunConfig& c, std::string_view, std::string_view v) { c.output_dir = std::string(v); },
                     [](const RunConfig& c) { return c.output_dir.string(); }});
        t.push_back({"run.geometry_path",
                     [](RunConfig& c, std::string_view, std::string_view v) {
                         if (v.empty()) c.geometry_path.reset();
                         else c.geometry_path = std::string(v);
                     },
                     [](const RunConfig& c) { return c.geometry_path ? c.geometry_path->string() : std::string(); }});

        t.push_back(double_entry("env.cell", [](auto& c) -> auto& { return c.env.cell; }));
        t.push_back(double_entry("env.move_amp", [](auto& c) -> auto& { return c.env.move_amp; }));
        t.push_back(double_entry("env.noise_amp", [](auto& c) -> auto& { return c.env.noise_amp; }));
        t.push_back({"env.noise_dirs", [](RunConfig& c, std::string_view k, std::string_view v) { c.env.noise_dirs = parse_int<int>(k, v); },
                     [](const RunConfig& c) { return fmt::format("{}", c.env.noise_dirs); }});
        t.push_back(double_entry("env.discount", [](auto& c) -> auto& { return c.env.discount; }));

        t.push_back(size_entry("so.modules", [](auto& c) -> auto& { return c.so.modules; }));
        t.push_back(size_entry("so.budget", [](auto& c) -> auto& { return c.so.budget; }));
        t.push_back(size_entry("so.max_sweeps", [](auto& c) -> auto& { return c.so.max_sweeps; }));
        t.push_back(double_entry("so.tol", [](auto& c) -> auto& { return c.so.tol; }));
        t.push_back(size_entry("so.warmup_splits", [](auto& c) -> auto& { return c.so.warmup_splits; }));
        t.push_back({"so.bound_variant",
                     [](RunConfig& c, std::string_view k, std::string_view v) {
                         try {
                             c.so.bound_variant = parse_bound_variant(v);
                         } catch (const std::invalid_argument& e) {
                             throw ConfigError(fmt::format("{}: {}", k, e.what()));
                         }
                     },
                     [](const RunConfig& c) { return std::string(to_string(c.so.bound_variant)); }});
        t.push_back({"so.influence_weight",
                     [](RunConfig& c, std::string_view k, std::string_view v) {
                         try {
                             c.so.influence_weight = parse_influence_weight(v);
                         } catch (const std::invalid_argument& e) {
                             throw ConfigError(fmt::format("{}: {}", k, e.what()));
                         }
                     },
                     [](const RunConfig& c) { return std::string(to_string(c.so.influence_weight)); }});
        t.push_back(size_entry("so.splits_per_call", [](auto& c) -> auto& { return c.so.splits_per_call; }));
        t.push_back(size_entry("so.learn_steps_per_pick", [](auto& c) -> auto& { return c.so.learn_steps_per_pick; }));
        t.push_back(double_entry("so.bound_tol", [](auto& c) -> auto& { return c.so.bound_tol; }));

        t.push_back(size_entry("eval.runs", [](auto& c) -> auto& { return c.eval.runs; }));
        t.push_back({"eval.policy",
                     [](RunConfig& c, std::string_view k, std::string_view v) {
                         try {
                             c.eval.policy = parse_policy_kind(v);
                         } catch (const std::invalid_argument& e) {
                             throw ConfigError(fmt::format("{}: {}", k, e.what()));
                         }
                     },
                     [](const RunConfig& c) { return std::string(to_string(c.eval.policy)); }});
        t.push_back(size_entry("eval.cap", [](auto& c) -> auto& { return c.eval.cap; }));

        t.push_back(double_entry("solve.tol", [](auto& c) -> auto& { return c.solve.tol; }));
        t.push_back(size_entry("solve.max_iter", [](auto& c) -> auto& { return c.solve.max_iter; }));

        t.push_back(size_entry("cluster.blobs", [](auto& c) -> auto& { return c.cluster.blobs; }));
        t.push_back(size_entry("cluster.points_per_blob", [](auto& c) -> auto& { return c.cluster.points_per_blob; }));
        t.push_back(double_entry("cluster.spread", [](auto& c) -> auto& { return c.cluster.spread; }));
        t.push_back(double_entry("cluster.separation", [](auto& c) -> auto& { return c.cluster.separation; }));
        t.push_back(size_entry("cluster.m", [](auto& c) -> auto& { return c.cluster.m; }));
        t.push_back(double_entry("cluster.eta", [](auto& c) -> auto& { return c.cluster.eta; }));
        t.push_back(size_entry("cluster.max_iter", [](auto& c) -> auto& { return c.cluster.max_iter; }));
        t.push_back(size_entry("cluster.max_sweeps", [](auto& c) -> auto& { return c.cluster.max_sweeps; }));
        t.push_back(double_entry("cluster.tol", [](auto& c) -> auto& { return c.cluster.tol; }));

        std::sort(t.begin(), t.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
        return t;
    }();
    return table;
}

void check_ranges(const RunConfig& cfg) {
    if (auto issues = cfg.env.check(); !issues.empty()) throw ConfigError("env: " + issues.front());
    if (cfg.so.modules < 1) throw ConfigError("so.modules must be >= 1");
    if (cfg.so.budget < 1) throw ConfigError("so.budget must be >= 1");
    if (cfg.so.splits_per_call < 1) throw ConfigError("so.splits_per_call must be >= 1");
    if (cfg.so.learn_steps_per_pick < 1) throw ConfigError("so.learn_steps_per_pick must be >= 1");
    if (!(cfg.so.bound_tol > 0.0)) throw ConfigError("so.bound_tol must be positive");
    if (cfg.eval.runs < 1) throw ConfigError("eval.runs must be >= 1");
    if (cfg.eval.cap < 1) throw ConfigError("eval.cap must be >= 1");
    if (!(cfg.solve.tol > 0.0)) throw ConfigError("solve.tol must be positive");
    if (cfg.cluster.m < 1 || cfg.cluster.blobs < 1 || cfg.cluster.points_per_blob < 1)
        throw ConfigError("cluster sizes must be >= 1");
    if (cfg.cluster.m > cfg.cluster.blobs * cfg.cluster.points_per_blob)
        throw ConfigError("cluster.m exceeds the number of points");
    if (cfg.geometry_path && !std::filesystem::exists(*cfg.geometry_path))
        throw ConfigError("geometry file not found: " + cfg.geometry_path->string());
}

} // namespace

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
    const auto& table = entries();
    const auto it = std::lower_bound(table.begin(), table.end(), key, [](const Entry& e, std::string_view k) { return e.key < k; });
    if (it == table.end() || it->key != key) throw ConfigError(fmt::format("unknown config key '{}'", key));
    it->set(cfg, key, value);
}

RunConfig parse_config(std::string_view text, std::string_view origin) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ConfigError(fmt::format("{}:{}: expected 'key = value'", origin, line_no));
        try {
            set_config_value(cfg, trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("{}:{}: {}", origin, line_no, e.what()));
        }
    }
    check_ranges(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

std::string canonical_text(const RunConfig& cfg) {
    std::string out;
    for (const auto& e : entries()) out += fmt::format("{} = {}\n", e.key, e.get(cfg));
    return out;
}

std::string config_hash(const RunConfig& cfg) {
    // the output location does not change any result, so it stays out of the hash
    RunConfig hashed = cfg;
    hashed.output_dir.clear();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text(hashed)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

nav::NavGeometry resolve_geometry(const RunConfig& cfg) {
    return cfg.geometry_path ? nav::load_geometry(*cfg.geometry_path) : nav::default_geometry();
}

} // namespace modso
