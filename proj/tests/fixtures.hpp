#pragma once

#include "modso/mdp.hpp"

#include <filesystem>
#include <string>

namespace fixture {

/// One state, one self-looping action with reward r.
inline modso::FiniteMdp one_state(double r, double gamma, int n_actions = 1) {
    std::vector<std::vector<modso::Successor>> rows(static_cast<std::size_t>(n_actions), {{0, 1.0}});
    return modso::FiniteMdp(1, static_cast<std::size_t>(n_actions), gamma, rows,
                            std::vector<double>(static_cast<std::size_t>(n_actions), r));
}

/// s0 → s1 with reward 0; s1 absorbing with reward 1. With `stay`, s0 gets a
/// second, self-looping action of reward 0 (and s1 a copy of its self-loop).
inline modso::FiniteMdp chain(double gamma, bool stay = false) {
    if (!stay) return modso::FiniteMdp(2, 1, gamma, {{{1, 1.0}}, {{1, 1.0}}}, {0.0, 1.0});
    return modso::FiniteMdp(2, 2, gamma, {{{0, 1.0}}, {{1, 1.0}}, {{1, 1.0}}, {{1, 1.0}}}, {0.0, 0.0, 1.0, 1.0});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("modso_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace fixture
