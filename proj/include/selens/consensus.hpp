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
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "selens/common.hpp"
#include "selens/order_stats.hpp"
#include "selens/types.hpp"

namespace selens {

struct ConsensusOutput {
    ScoreList scores;  // orientation noted per method
    RankList ranks;
};

namespace detail {

inline std::size_t common_size(const std::vector<RankList>& lists, const char* what) {
    if (lists.empty()) {
        throw validation_error(std::string(what) + ": need at least one rank list");
    }
    const std::size_t T = lists.front().size();
    for (const auto& l : lists) {
        if (l.size() != T) {
            throw validation_error(std::string(what) + ": rank lists cover different tick sets");
        }
        if (!is_permutation_of_ticks(l)) {
            throw validation_error(std::string(what) + ": input is not a valid permutation");
        }
    }
    return T;
}

} // namespace detail

// Inverse-rank aggregation: score(t) = mean over lists of 1/rank_i(t)
// (1-based), final order descending with ties broken by ascending tick.
inline ConsensusOutput inverse_rank(const std::vector<RankList>& lists) {
    const std::size_t T = detail::common_size(lists, "inverse_rank");
    ConsensusOutput out;
    out.scores.id = "InverseRank";
    out.scores.scores.assign(T, 0.0);
    for (const auto& l : lists) {
        const auto ranks = ranks_of(l);
        for (std::size_t t = 0; t < T; ++t) {
            out.scores.scores[t] += 1.0 / static_cast<double>(ranks[t]);
        }
    }
    for (double& v : out.scores.scores) v /= static_cast<double>(lists.size());
    out.ranks = rank_from_scores(out.scores.scores);
    return out;
}

// Total pairwise disagreements of `order` against the voter profile
// (the Kemeny objective).
inline std::uint64_t kemeny_cost(const std::vector<RankList>& lists, const RankList& order) {
    const std::size_t T = order.size();
    // votes[a][b] = number of lists ranking a before b
    std::vector<std::vector<std::uint32_t>> votes(T, std::vector<std::uint32_t>(T, 0));
    for (const auto& l : lists) {
        const auto ranks = ranks_of(l);
        for (std::size_t a = 0; a < T; ++a) {
            for (std::size_t b = 0; b < T; ++b) {
                if (a != b && ranks[a] < ranks[b]) ++votes[a][b];
            }
        }
    }
    std::uint64_t cost = 0;
    for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t j = i + 1; j < T; ++j) {
            cost += votes[order.order[j]][order.order[i]];
        }
    }
    return cost;
}

enum class KemenyMode { exact, heuristic, automatic };

inline constexpr std::size_t kKemenyExactLimit = 12;

namespace detail {

inline std::vector<std::vector<std::uint32_t>> pairwise_votes(
    const std::vector<RankList>& lists, std::size_t T) {
    std::vector<std::vector<std::uint32_t>> votes(T, std::vector<std::uint32_t>(T, 0));
    for (const auto& l : lists) {
        for (std::size_t i = 0; i < T; ++i) {
            for (std::size_t j = i + 1; j < T; ++j) {
                ++votes[l.order[i]][l.order[j]];
            }
        }
    }
    return votes;
}

// Subset DP over prefixes: g[S] = optimal completion cost once the items in
// S occupy the first |S| positions. Placing e next costs the votes of every
// still-unplaced item over e. Reconstruction picks the smallest tick index
// achieving the optimum, so ties yield the lexicographically smallest order.
inline RankList kemeny_exact(const std::vector<RankList>& lists, std::size_t T) {
    const auto votes = pairwise_votes(lists, T);
    const std::size_t full = std::size_t{1} << T;
    constexpr std::uint64_t kInf = ~std::uint64_t{0};
    std::vector<std::uint64_t> g(full, kInf);
    g[full - 1] = 0;
    // iterate masks by descending popcount via plain reverse order; any mask's
    // successors (mask | bit) are numerically larger, so reverse order works
    for (std::size_t mask = full - 1; mask-- > 0;) {
        std::uint64_t best = kInf;
        for (std::size_t e = 0; e < T; ++e) {
            if (mask & (std::size_t{1} << e)) continue;
            std::uint64_t place = 0;
            for (std::size_t f = 0; f < T; ++f) {
                if (f == e || (mask & (std::size_t{1} << f))) continue;
                place += votes[f][e];
            }
            const std::uint64_t next = g[mask | (std::size_t{1} << e)];
            if (next != kInf && place + next < best) best = place + next;
        }
        g[mask] = best;
    }
    RankList out;
    out.order.reserve(T);
    std::size_t mask = 0;
    while (mask != full - 1) {
        for (std::size_t e = 0; e < T; ++e) {
            if (mask & (std::size_t{1} << e)) continue;
            std::uint64_t place = 0;
            for (std::size_t f = 0; f < T; ++f) {
                if (f == e || (mask & (std::size_t{1} << f))) continue;
                place += votes[f][e];
            }
            if (place + g[mask | (std::size_t{1} << e)] == g[mask]) {
                out.order.push_back(e);
                mask |= std::size_t{1} << e;
                break;
            }
        }
    }
    return out;
}

// Borda-count start followed by local Kemenization: adjacent transpositions
// while they strictly reduce the pairwise disagreement cost.
inline RankList kemeny_heuristic(const std::vector<RankList>& lists, std::size_t T) {
    const auto votes = pairwise_votes(lists, T);
    std::vector<std::uint64_t> borda(T, 0);
    for (const auto& l : lists) {
        const auto ranks = ranks_of(l);
        for (std::size_t t = 0; t < T; ++t) borda[t] += ranks[t];
    }
    RankList out;
    out.order.resize(T);
    std::iota(out.order.begin(), out.order.end(), std::size_t{0});
    std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
        if (borda[a] != borda[b]) return borda[a] < borda[b];
        return a < b;
    });
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t i = 0; i + 1 < T; ++i) {
            const std::size_t a = out.order[i];
            const std::size_t b = out.order[i + 1];
            // a currently before b costs votes[b][a]; swapping costs votes[a][b]
            if (votes[a][b] < votes[b][a]) {
                std::swap(out.order[i], out.order[i + 1]);
                improved = true;
            }
        }
    }
    return out;
}

} // namespace detail

// Kemeny-Young rank aggregation. Exact subset-DP up to 12 ticks; beyond
// that the Borda + local-Kemenization heuristic (automatic mode picks for
// you). Requesting exact mode above the limit raises a capacity error.
inline RankList kemeny_young(const std::vector<RankList>& lists,
                             KemenyMode mode = KemenyMode::automatic) {
    const std::size_t T = detail::common_size(lists, "kemeny_young");
    if (mode == KemenyMode::automatic) {
        mode = T <= kKemenyExactLimit ? KemenyMode::exact : KemenyMode::heuristic;
    }
    if (mode == KemenyMode::exact) {
        if (T > kKemenyExactLimit) {
            throw capacity_error("kemeny_young exact mode supports at most " +
                                 std::to_string(kKemenyExactLimit) +
                                 " ticks (got " + std::to_string(T) +
                                 "); use heuristic mode");
        }
        return detail::kemeny_exact(lists, T);
    }
    return detail::kemeny_heuristic(lists, T);
}

// Robust rank aggregation: per tick, the sorted normalized ranks across
// lists feed the uniform-order-statistic tail probability; rho is the
// minimum over positions, Bonferroni-corrected (x m, capped at 1) unless
// disabled. Lower rho means more anomalous; the returned order is ascending
// rho with ties by ascending tick.
inline ConsensusOutput rra(const std::vector<RankList>& lists, bool bonferroni = true) {
    const std::size_t T = detail::common_size(lists, "rra");
    const std::size_t m = lists.size();
    std::vector<std::vector<std::size_t>> ranks;
    ranks.reserve(m);
    for (const auto& l : lists) ranks.push_back(ranks_of(l));

    ConsensusOutput out;
    out.scores.id = "RRA";
    out.scores.scores.assign(T, 1.0);
    std::vector<double> r(m);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < m; ++i) {
            r[i] = static_cast<double>(ranks[i][t]) / static_cast<double>(T);
        }
        std::sort(r.begin(), r.end());
        double rho = 1.0;
        for (std::size_t l = 1; l <= m; ++l) {
            rho = std::min(rho, binomial_rank_tail(l, m, r[l - 1]));
        }
        if (bonferroni) rho = std::min(1.0, rho * static_cast<double>(m));
        out.scores.scores[t] = rho;
    }
    out.ranks.order.resize(T);
    std::iota(out.ranks.order.begin(), out.ranks.order.end(), std::size_t{0});
    std::stable_sort(out.ranks.order.begin(), out.ranks.order.end(),
                     [&](std::size_t a, std::size_t b) {
                         if (out.scores.scores[a] != out.scores.scores[b]) {
                             return out.scores.scores[a] < out.scores.scores[b];
                         }
                         return a < b;
                     });
    return out;
}

enum class Combiner { avg, max };

// Score-based consensus over calibrated probability lists.
inline ConsensusOutput prob_aggregate(const std::vector<ProbList>& probs, Combiner c) {
    if (probs.empty()) {
        throw validation_error("prob_aggregate: need at least one probability list");
    }
    const std::size_t T = probs.front().probs.size();
    for (const auto& p : probs) {
        if (p.probs.size() != T) {
            throw validation_error("prob_aggregate: probability lists cover different tick sets");
        }
    }
    ConsensusOutput out;
    out.scores.id = c == Combiner::avg ? "avg" : "max";
    out.scores.scores.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double acc = c == Combiner::avg ? 0.0 : -std::numeric_limits<double>::infinity();
        for (const auto& p : probs) {
            acc = c == Combiner::avg ? acc + p.probs[t] : std::max(acc, p.probs[t]);
        }
        out.scores.scores[t] = c == Combiner::avg ? acc / static_cast<double>(probs.size()) : acc;
    }
    out.ranks = rank_from_scores(out.scores.scores);
    return out;
}

} // namespace selens
