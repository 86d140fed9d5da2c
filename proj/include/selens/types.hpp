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
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "selens/common.hpp"

namespace selens {

// Per-time-point anomaly scores from one detector x feature combination.
// Higher means more anomalous. Entries before valid_from (warm-up) are
// exactly zero.
struct ScoreList {
    std::string id;
    std::vector<double> scores;
    std::size_t valid_from = 0;

    std::size_t size() const { return scores.size(); }
};

// Calibrated probability estimates for one score list. probs follow the tick
// order of the source and are a non-decreasing function of its scores.
// labels (mixture modeling only) flag ticks with outlier posterior > 0.5.
struct ProbList {
    std::string source_id;
    std::vector<double> probs;
    std::vector<std::uint8_t> labels;
    bool has_labels = false;
    bool converged = true;
    std::size_t valid_from = 0;
};

// Permutation of tick indices 0..T-1, most- to least-anomalous. tie_groups
// marks maximal runs of ticks whose underlying scores were equal, as
// (start offset in order, run length) pairs; only runs of length >= 2 are
// recorded.
struct RankList {
    std::vector<std::size_t> order;
    std::vector<std::pair<std::size_t, std::size_t>> tie_groups;

    std::size_t size() const { return order.size(); }
};

// Ranks ticks by descending score; ties broken by ascending tick index.
// This is the one tie rule used everywhere, so runs are reproducible.
inline RankList rank_from_scores(const std::vector<double>& scores) {
    RankList r;
    r.order.resize(scores.size());
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](std::size_t a, std::size_t b) {
                         if (scores[a] != scores[b]) return scores[a] > scores[b];
                         return a < b;
                     });
    std::size_t run = 0;
    while (run < r.order.size()) {
        std::size_t end = run + 1;
        while (end < r.order.size() && scores[r.order[end]] == scores[r.order[run]]) ++end;
        if (end - run >= 2) r.tie_groups.emplace_back(run, end - run);
        run = end;
    }
    return r;
}

// 1-based rank of every tick under the given order.
inline std::vector<std::size_t> ranks_of(const RankList& r) {
    std::vector<std::size_t> ranks(r.order.size());
    for (std::size_t pos = 0; pos < r.order.size(); ++pos) {
        ranks[r.order[pos]] = pos + 1;
    }
    return ranks;
}

inline bool is_permutation_of_ticks(const RankList& r) {
    std::vector<bool> seen(r.order.size(), false);
    for (std::size_t t : r.order) {
        if (t >= r.order.size() || seen[t]) return false;
        seen[t] = true;
    }
    return true;
}

// Node responsibility ranking for one anomalous tick.
struct Attribution {
    std::size_t tick = 0;
    std::vector<std::size_t> ranked_nodes;  // most- to least-responsible
    std::vector<double> responsibility;     // non-increasing, >= 0
};

// Output of an ensemble-selection strategy. `selected` preserves selection
// order (vertical seeds first). `target` is the pseudo ground-truth vector
// (vertical/diverse); `target_ticks` is the majority-voted anomaly set O
// (horizontal). diagnostics carries per-candidate correlations or counts in
// examination order.
struct SelectionResult {
    std::vector<std::string> selected;
    std::vector<double> target;
    std::vector<std::size_t> target_ticks;
    std::vector<std::pair<std::string, double>> diagnostics;
    std::vector<std::string> warnings;
};

} // namespace selens
