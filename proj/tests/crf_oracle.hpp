#pragma once

#include <cmath>
#include <vector>

#include "sahm/textproc.hpp"

namespace sahm::testkit {

/// Exhaustive search over every label path; lowest lexicographic index wins ties.
inline std::vector<textproc::Role> brute_force_decode(const Tensor& emissions, const Tensor& transitions)
{
    using textproc::kNumRoles;
    using textproc::Role;
    const int t = emissions.dim(0);
    int paths = 1;
    for (int i = 0; i < t; ++i) paths *= kNumRoles;
    std::vector<Role> best;
    double best_score = -INFINITY;
    for (int code = 0; code < paths; ++code) {
        std::vector<Role> path(static_cast<std::size_t>(t));
        int c = code;
        for (int i = t - 1; i >= 0; --i) {
            path[static_cast<std::size_t>(i)] = static_cast<Role>(c % kNumRoles);
            c /= kNumRoles;
        }
        const double s = textproc::path_score(emissions, transitions, path);
        if (s > best_score) {
            best_score = s;
            best = path;
        }
    }
    return best;
}

} // namespace sahm::testkit
