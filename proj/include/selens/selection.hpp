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
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "selens/calibration.hpp"
#include "selens/common.hpp"
#include "selens/order_stats.hpp"
#include "selens/random.hpp"
#include "selens/types.hpp"

namespace selens {

// Weighted Pearson correlation with weighted means/variances. Throws when
// either vector is constant over the positively weighted positions (zero
// weighted variance); selection code treats that as "sorts last".
inline double weighted_pearson(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<double>& w) {
    if (x.size() != y.size() || x.size() != w.size() || x.size() < 2) {
        throw validation_error("weighted_pearson: need equal-length vectors of size >= 2");
    }
    double sw = 0.0;
    for (double wi : w) {
        if (wi < 0.0) throw validation_error("weighted_pearson: negative weight");
        sw += wi;
    }
    if (sw <= 0.0) throw validation_error("weighted_pearson: weights sum to zero");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += w[i] * x[i];
        my += w[i] * y[i];
    }
    mx /= sw;
    my /= sw;
    double cxy = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        cxy += w[i] * dx * dy;
        vx += w[i] * dx * dx;
        vy += w[i] * dy * dy;
    }
    // exact-constant guard first, then the numeric one
    bool x_const = true, y_const = true;
    double x0 = 0.0, y0 = 0.0;
    bool seen = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (w[i] <= 0.0) continue;
        if (!seen) {
            x0 = x[i];
            y0 = y[i];
            seen = true;
            continue;
        }
        if (x[i] != x0) x_const = false;
        if (y[i] != y0) y_const = false;
    }
    if (x_const || y_const || vx <= 0.0 || vy <= 0.0) {
        throw undefined_correlation_error("weighted_pearson: zero weighted variance");
    }
    return std::clamp(cxy / std::sqrt(vx * vy), -1.0, 1.0);
}

inline std::optional<double> try_weighted_pearson(const std::vector<double>& x,
                                                  const std::vector<double>& y,
                                                  const std::vector<double>& w) {
    try {
        return weighted_pearson(x, y, w);
    } catch (const undefined_correlation_error&) {
        return std::nullopt;
    }
}

// Memoized per-list calibrations. Selection and the score-based consensus
// methods both calibrate the same lists; callers that run many ensembles on
// a fixed list set share one cache. Keys are component ids, so only pass a
// cache whose entries really correspond to the lists at hand.
struct CalibrationCache {
    std::map<std::string, ProbList> unified;
    std::map<std::string, ProbList> mixture;

    const ProbList& get_unified(const ScoreList& s) {
        auto it = unified.find(s.id);
        if (it == unified.end()) it = unified.emplace(s.id, unify(s)).first;
        return it->second;
    }
    const ProbList& get_mixture(const ScoreList& s) {
        auto it = mixture.find(s.id);
        if (it == mixture.end()) it = mixture.emplace(s.id, mixture_model(s)).first;
        return it->second;
    }
};

namespace detail {

// Low/high 2-means split of the strike counts (paper-style: centroids seeded
// at the smallest and largest non-zero counts). Returns discard flags for
// the high cluster. Zero counts never cluster and are never discarded. One
// shared non-zero value across *every* list means no separation (keep all);
// held by a strict subset it is discarded only when it flags a majority of
// the target anomalies (a handful of strikes is within the noise of the
// pseudo ground truth).
inline std::vector<bool> split_counts_high(const std::vector<std::size_t>& counts,
                                           std::size_t n_anomalies) {
    const std::size_t m = counts.size();
    std::vector<bool> discard(m, false);
    std::vector<std::size_t> nz;
    for (std::size_t i = 0; i < m; ++i) {
        if (counts[i] > 0) nz.push_back(i);
    }
    if (nz.empty()) return discard;
    std::size_t cmin = counts[nz[0]], cmax = counts[nz[0]];
    for (std::size_t i : nz) {
        cmin = std::min(cmin, counts[i]);
        cmax = std::max(cmax, counts[i]);
    }
    if (cmin == cmax) {
        if (nz.size() < m && 2 * cmax > n_anomalies) {
            for (std::size_t i : nz) discard[i] = true;
        }
        return discard;
    }
    double lo = static_cast<double>(cmin), hi = static_cast<double>(cmax);
    std::vector<bool> in_hi(nz.size(), false);
    for (int it = 0; it < 100; ++it) {
        bool changed = false;
        double lo_sum = 0.0, hi_sum = 0.0;
        std::size_t lo_n = 0, hi_n = 0;
        for (std::size_t j = 0; j < nz.size(); ++j) {
            const double c = static_cast<double>(counts[nz[j]]);
            const bool hi_side = std::abs(c - hi) < std::abs(c - lo);  // ties stay low
            if (hi_side != in_hi[j]) changed = true;
            in_hi[j] = hi_side;
            if (hi_side) {
                hi_sum += c;
                ++hi_n;
            } else {
                lo_sum += c;
                ++lo_n;
            }
        }
        if (lo_n > 0) lo = lo_sum / static_cast<double>(lo_n);
        if (hi_n > 0) hi = hi_sum / static_cast<double>(hi_n);
        if (!changed) break;
    }
    for (std::size_t j = 0; j < nz.size(); ++j) {
        if (in_hi[j]) discard[nz[j]] = true;
    }
    return discard;
}

inline std::vector<double> average_of(const std::vector<const std::vector<double>*>& lists) {
    std::vector<double> avg(lists.front()->size(), 0.0);
    for (const auto* l : lists) {
        for (std::size_t t = 0; t < avg.size(); ++t) avg[t] += (*l)[t];
    }
    for (double& v : avg) v /= static_cast<double>(lists.size());
    return avg;
}

// Correlation-guided greedy selection shared by the vertical
// (descending / correlation-favored) and diversity (ascending) strategies.
// The two differ in more than the ordering: vertical builds its pseudo
// ground truth as the average of the unified lists and weights ticks by
// 1/rank in it, while the diversity flavor targets the binary union of
// every list's top ticks with uniform weights, which is what makes it
// diversity-hungry (anything covering fresh ground "improves"). Candidates
// with undefined correlation sort last in both modes and are never picked
// as seed.
inline SelectionResult vertical_family(const std::vector<ScoreList>& lists, bool ascending,
                                       CalibrationCache* cache) {
    if (lists.empty()) {
        throw validation_error("selection: need at least one score list");
    }
    const std::size_t m = lists.size();
    const std::size_t T = lists.front().size();
    for (const auto& s : lists) {
        if (s.size() != T) {
            throw validation_error("selection: score lists cover different tick sets");
        }
    }
    CalibrationCache local;
    CalibrationCache& cc = cache ? *cache : local;

    std::vector<const std::vector<double>*> probs(m);
    for (std::size_t i = 0; i < m; ++i) probs[i] = &cc.get_unified(lists[i]).probs;

    SelectionResult res;
    std::vector<double> w(T, 1.0);
    if (!ascending) {
        res.target = average_of(probs);
        // weights 1/r, r = 1-based rank of the tick in the target (descending)
        const RankList target_rank = rank_from_scores(res.target);
        const auto target_ranks = ranks_of(target_rank);
        for (std::size_t t = 0; t < T; ++t) w[t] = 1.0 / static_cast<double>(target_ranks[t]);
    } else {
        res.target.assign(T, 0.0);
        const std::size_t top = std::max<std::size_t>(1, (T + 19) / 20);  // top 5% per list
        for (const auto& s : lists) {
            const auto order = rank_from_scores(s.scores).order;
            for (std::size_t pos = 0; pos < top; ++pos) res.target[order[pos]] = 1.0;
        }
    }

    std::vector<std::optional<double>> corr0(m);
    for (std::size_t i = 0; i < m; ++i) corr0[i] = try_weighted_pearson(*probs[i], res.target, w);

    // candidate ordering: defined before undefined, then by correlation per
    // mode, then by original index
    auto better = [&](const std::optional<double>& a, std::size_t ia,
                      const std::optional<double>& b, std::size_t ib) {
        if (a.has_value() != b.has_value()) return a.has_value();
        if (a && b && *a != *b) return ascending ? *a < *b : *a > *b;
        return ia < ib;
    };

    std::size_t seed = 0;
    bool have_seed = false;
    for (std::size_t i = 0; i < m; ++i) {
        if (!corr0[i]) continue;
        if (!have_seed || better(corr0[i], i, corr0[seed], seed)) {
            seed = i;
            have_seed = true;
        }
    }
    if (!have_seed) {
        // every candidate unifies to a constant; degrade to the first list
        seed = 0;
        res.warnings.push_back("all candidates have undefined correlation; seeding with " +
                               lists[0].id);
    }

    std::vector<double> sum = *probs[seed];
    std::vector<std::size_t> members{seed};
    res.selected.push_back(lists[seed].id);
    res.diagnostics.emplace_back(lists[seed].id,
                                 corr0[seed] ? *corr0[seed]
                                             : std::numeric_limits<double>::quiet_NaN());
    std::optional<double> cur = corr0[seed];

    std::vector<std::size_t> remaining;
    for (std::size_t i = 0; i < m; ++i) {
        if (i != seed) remaining.push_back(i);
    }

    while (!remaining.empty()) {
        // re-sort remaining by correlation to the current prediction
        std::vector<double> pred(sum);
        for (double& v : pred) v /= static_cast<double>(members.size());
        std::size_t pick = 0;
        std::optional<double> pick_corr;
        for (std::size_t j = 0; j < remaining.size(); ++j) {
            auto c = try_weighted_pearson(*probs[remaining[j]], pred, w);
            if (j == 0 || better(c, remaining[j], pick_corr, remaining[pick])) {
                pick = j;
                pick_corr = c;
            }
        }
        const std::size_t l = remaining[pick];
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));

        std::vector<double> cand(sum);
        for (std::size_t t = 0; t < T; ++t) cand[t] += (*probs[l])[t];
        for (double& v : cand) v /= static_cast<double>(members.size() + 1);
        auto cand_corr = try_weighted_pearson(cand, res.target, w);
        res.diagnostics.emplace_back(lists[l].id,
                                     cand_corr ? *cand_corr
                                               : std::numeric_limits<double>::quiet_NaN());
        const bool accept = cand_corr && (!cur || *cand_corr > *cur);
        if (accept) {
            for (std::size_t t = 0; t < T; ++t) sum[t] += (*probs[l])[t];
            members.push_back(l);
            res.selected.push_back(lists[l].id);
            cur = cand_corr;
        }
    }
    return res;
}

} // namespace detail

// Vertical selection: build a pseudo ground truth as the average of the
// unified lists, seed with the best-correlated list, then greedily keep a
// candidate only if it strictly improves the ensemble prediction's weighted
// correlation to the target. Every candidate is examined exactly once.
inline SelectionResult select_vertical(const std::vector<ScoreList>& lists,
                                       CalibrationCache* cache = nullptr) {
    return detail::vertical_family(lists, /*ascending=*/false, cache);
}

// Diversity-favored variant: both candidate orderings are ascending
// (least correlated first); the acceptance test is unchanged.
inline SelectionResult select_diverse(const std::vector<ScoreList>& lists,
                                      CalibrationCache* cache = nullptr) {
    return detail::vertical_family(lists, /*ascending=*/true, cache);
}

// Horizontal selection: majority-voted mixture-model labels define target
// anomalies O. For each anomaly the sorted normalized ranks across lists
// give a tail-probability sequence; every list ordered strictly after the
// minimum-probability position collects a strike. Lists whose strike counts
// fall in the high cluster of a min/max-seeded 2-means are discarded;
// zero-count lists are always retained.
inline SelectionResult select_horizontal(const std::vector<ScoreList>& lists,
                                         CalibrationCache* cache = nullptr) {
    const std::size_t m = lists.size();
    if (m < 2) {
        throw validation_error("select_horizontal: need at least 2 score lists");
    }
    const std::size_t T = lists.front().size();
    for (const auto& s : lists) {
        if (s.size() != T) {
            throw validation_error("selection: score lists cover different tick sets");
        }
    }
    CalibrationCache local;
    CalibrationCache& cc = cache ? *cache : local;

    SelectionResult res;
    std::vector<std::size_t> votes(T, 0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& labels = cc.get_mixture(lists[i]).labels;
        for (std::size_t t = 0; t < T; ++t) votes[t] += labels[t];
    }
    for (std::size_t t = 0; t < T; ++t) {
        if (2 * votes[t] > m) res.target_ticks.push_back(t);  // strict majority
    }
    if (res.target_ticks.empty()) {
        res.warnings.push_back("no majority anomalies; falling back to the full set");
        for (const auto& s : lists) res.selected.push_back(s.id);
        for (const auto& s : lists) res.diagnostics.emplace_back(s.id, 0.0);
        return res;
    }

    std::vector<std::vector<std::size_t>> ranks(m);
    for (std::size_t i = 0; i < m; ++i) ranks[i] = ranks_of(rank_from_scores(lists[i].scores));

    std::vector<std::size_t> counts(m, 0);
    std::vector<std::pair<double, std::size_t>> order(m);
    for (std::size_t o : res.target_ticks) {
        for (std::size_t i = 0; i < m; ++i) {
            order[i] = {static_cast<double>(ranks[i][o]) / static_cast<double>(T), i};
        }
        std::sort(order.begin(), order.end());  // rank ties fall back to list index
        double best_p = 2.0;
        std::size_t m_ind = 1;
        for (std::size_t l = 1; l <= m; ++l) {
            const double p = binomial_rank_tail(l, m, order[l - 1].first);
            if (p < best_p) {
                best_p = p;
                m_ind = l;
            }
        }
        for (std::size_t pos = m_ind + 1; pos <= m; ++pos) {
            ++counts[order[pos - 1].second];
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        res.diagnostics.emplace_back(lists[i].id, static_cast<double>(counts[i]));
    }

    const auto discard = detail::split_counts_high(counts, res.target_ticks.size());
    for (std::size_t i = 0; i < m; ++i) {
        if (!discard[i]) res.selected.push_back(lists[i].id);
    }
    return res;
}

inline SelectionResult select_all(const std::vector<ScoreList>& lists) {
    if (lists.empty()) {
        throw validation_error("select_all: need at least one score list");
    }
    SelectionResult res;
    for (const auto& s : lists) res.selected.push_back(s.id);
    return res;
}

inline SelectionResult select_random(const std::vector<ScoreList>& lists, std::size_t k,
                                     std::uint64_t seed) {
    if (lists.empty()) {
        throw validation_error("select_random: need at least one score list");
    }
    if (k < 1 || k > lists.size()) {
        throw validation_error("select_random: k=" + std::to_string(k) +
                               " out of range 1.." + std::to_string(lists.size()));
    }
    Rng rng(seed);
    SelectionResult res;
    for (std::size_t i : rng.sample_indices(lists.size(), k)) {
        res.selected.push_back(lists[i].id);
    }
    return res;
}

} // namespace selens
