/*
 * Copyright 2025 The Selens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "selens/common.hpp"
#include "selens/features.hpp"
#include "selens/types.hpp"

namespace selens {

namespace detail {

// Per-node excess over the moving three-sigma band. Mean/std are expanding
// over the strictly prior ticks [0, t-1]; sample std (n-1 denominator).
// Ticks 0 and 1 have no defined sigma and score 0.
inline std::vector<double> maed_node_scores(const FeatureMatrix& fm, std::size_t tick) {
    const auto n = fm.nodes();
    std::vector<double> out(n, 0.0);
    if (tick < 2) return out;
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0, m2 = 0.0;
        for (std::size_t t = 0; t < tick; ++t) {
            const double x = fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
            const double d = x - mean;
            mean += d / static_cast<double>(t + 1);
            m2 += d * (x - mean);
        }
        const double sd = std::sqrt(m2 / static_cast<double>(tick - 1));
        const double x = fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(tick));
        out[i] = std::max(0.0, x - (mean + 3.0 * sd));
    }
    return out;
}

} // namespace detail

// Moving-average detector: each node contributes its excess over
// mean + 3 * moving-std of its own past; the tick score is the sum over
// nodes.
inline ScoreList maed(const FeatureMatrix& fm) {
    const auto n = fm.nodes();
    const auto T = fm.ticks();
    ScoreList s;
    s.id = "MAED";
    s.valid_from = 2;
    s.scores.assign(T, 0.0);
    if (T < 3) return s;

    std::vector<double> mean(n, 0.0), m2(n, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        if (t >= 2) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double sd = std::sqrt(m2[i] / static_cast<double>(t - 1));
                const double x =
                    fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
                total += std::max(0.0, x - (mean[i] + 3.0 * sd));
            }
            s.scores[t] = total;
        }
        // fold tick t into the running moments (Welford)
        for (std::size_t i = 0; i < n; ++i) {
            const double x = fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
            const double d = x - mean[i];
            mean[i] += d / static_cast<double>(t + 1);
            m2[i] += d * (x - mean[i]);
        }
    }
    return s;
}

inline Attribution maed_attribute(const FeatureMatrix& fm, std::size_t tick) {
    if (tick < 2 || tick >= fm.ticks()) {
        throw validation_error("MAED attribution: tick " + std::to_string(tick) +
                               " is in warm-up or out of range");
    }
    auto resp = detail::maed_node_scores(fm, tick);
    Attribution a;
    a.tick = tick;
    a.ranked_nodes.resize(resp.size());
    std::iota(a.ranked_nodes.begin(), a.ranked_nodes.end(), std::size_t{0});
    std::stable_sort(a.ranked_nodes.begin(), a.ranked_nodes.end(),
                     [&](std::size_t x, std::size_t y) {
                         if (resp[x] != resp[y]) return resp[x] > resp[y];
                         return x < y;
                     });
    a.responsibility.reserve(resp.size());
    for (std::size_t i : a.ranked_nodes) a.responsibility.push_back(resp[i]);
    return a;
}

} // namespace selens
