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
#include <map>
#include <string>
#include <vector>

#include "selens/common.hpp"
#include "selens/graph.hpp"
#include "selens/pipeline.hpp"
#include "selens/random.hpp"
#include "selens/types.hpp"

namespace selens {

struct EventTruth {
    std::vector<std::size_t> event_ticks;
    std::vector<std::string> labels;  // optional descriptions, parallel to ticks
};

// Ground-truth ticks widened by the delay tolerance: the union of
// [t-d, t+d] over events, clipped to [0, T).
inline std::vector<bool> expand_truth(const EventTruth& truth, std::size_t delay,
                                      std::size_t T) {
    if (truth.event_ticks.empty()) {
        throw validation_error("event truth is empty");
    }
    std::vector<bool> positive(T, false);
    for (std::size_t t : truth.event_ticks) {
        if (t >= T) {
            throw validation_error("event tick " + std::to_string(t) + " outside [0," +
                                   std::to_string(T) + ")");
        }
        const std::size_t lo = t >= delay ? t - delay : 0;
        const std::size_t hi = std::min(T - 1, t + delay);
        for (std::size_t u = lo; u <= hi; ++u) positive[u] = true;
    }
    return positive;
}

// Positional average precision with delay tolerance: mean of precision at
// each positive's rank, normalized by the number of (window-expanded)
// positives.
inline double average_precision(const RankList& r, const EventTruth& truth,
                                std::size_t delay = 0) {
    const std::size_t T = r.size();
    const auto positive = expand_truth(truth, delay, T);
    std::size_t total = 0;
    for (bool b : positive) total += b ? 1 : 0;
    double hits = 0.0, ap = 0.0;
    for (std::size_t pos = 0; pos < T; ++pos) {
        if (positive[r.order[pos]]) {
            hits += 1.0;
            ap += hits / static_cast<double>(pos + 1);
        }
    }
    return ap / static_cast<double>(total);
}

// Appends k noisy components: each is a random permutation of a randomly
// chosen source list's scores, tagged noise-0..noise-(k-1). Seeded draws,
// so equal seeds give identical noise and the k-sweep nests (the first j
// lists of a k-run equal the j-run).
inline std::vector<ScoreList> inject_noise(const std::vector<ScoreList>& lists, std::size_t k,
                                           std::uint64_t seed) {
    if (lists.empty()) {
        throw validation_error("inject_noise: empty input set");
    }
    std::vector<ScoreList> out = lists;
    Rng rng(seed);
    const std::size_t m = lists.size();
    const std::size_t T = lists.front().size();
    for (std::size_t i = 0; i < k; ++i) {
        const auto& src = lists[rng.below(m)];
        std::vector<std::size_t> perm(T);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        ScoreList noise;
        noise.id = "noise-" + std::to_string(i);
        noise.valid_from = 0;
        noise.scores.resize(T);
        for (std::size_t t = 0; t < T; ++t) noise.scores[t] = src.scores[perm[t]];
        out.push_back(std::move(noise));
    }
    return out;
}

struct EvalReport {
    std::map<std::size_t, double> ap_by_delay;
    bool has_significance = false;
    double rand_mu = 0.0;
    double rand_sigma = 0.0;
    double z_gain = 0.0;
    bool z_defined = false;  // false when sigma == 0
    std::size_t k1 = 0;      // selected component counts driving the random draws
    std::size_t k2 = 0;
    std::size_t trials = 0;
};

inline double z_gain_of(double ap, double mu, double sigma) {
    return (ap - mu) / sigma;
}

// Selective run vs. `trials` random ensembles matched in selection size:
// random pipelines replace both selection phases with seeded uniform
// subsets of the sizes the selective run chose.
inline EvalReport significance_vs_random(const std::vector<ScoreList>& lists,
                                         const PipelineConfig& cfg, const EventTruth& truth,
                                         std::size_t trials, std::uint64_t seed,
                                         std::size_t delay = 0,
                                         CalibrationCache* shared_cache = nullptr) {
    if (trials < 2) {
        throw validation_error("significance_vs_random: trials must be >= 2");
    }
    if (cfg.strategy.kind == Strategy::full || cfg.strategy.kind == Strategy::random) {
        throw validation_error("significance_vs_random: needs a selective strategy");
    }
    CalibrationCache local;
    CalibrationCache& cache = shared_cache ? *shared_cache : local;
    const auto rep = run_ensemble(lists, cfg, &cache);
    EvalReport out;
    out.has_significance = true;
    out.trials = trials;
    out.k1 = rep.phase1.selected.size();
    out.k2 = rep.phase2.selected.size();
    const double ap_sel = average_precision(rep.final_ranks, truth, delay);
    out.ap_by_delay[delay] = ap_sel;

    std::vector<double> aps(trials);
    PipelineConfig rnd = cfg;
    rnd.phase2_strategy.reset();
    for (std::size_t i = 0; i < trials; ++i) {
        rnd.strategy = StrategySpec{Strategy::random, out.k1, out.k2, derive_seed(seed, i)};
        const auto r = run_ensemble(lists, rnd, &cache);
        aps[i] = average_precision(r.final_ranks, truth, delay);
    }
    double mu = 0.0;
    for (double a : aps) mu += a;
    mu /= static_cast<double>(trials);
    double var = 0.0;
    for (double a : aps) var += (a - mu) * (a - mu);
    var /= static_cast<double>(trials - 1);  // sample std over the trials
    out.rand_mu = mu;
    out.rand_sigma = std::sqrt(var);
    if (out.rand_sigma > 0.0) {
        out.z_defined = true;
        out.z_gain = z_gain_of(ap_sel, mu, out.rand_sigma);
    }
    return out;
}

inline EvalReport significance_vs_random(const TemporalGraphSequence& g,
                                         const PipelineConfig& cfg, const EventTruth& truth,
                                         std::size_t trials, std::uint64_t seed,
                                         std::size_t delay = 0) {
    return significance_vs_random(run_detectors(g, cfg), cfg, truth, trials, seed, delay);
}

struct SynthParams {
    double edge_prob = 0.02;       // mean background edge probability per pair per tick
    std::size_t clique_size = 10;  // nodes in each planted event clique
    int max_weight = 3;            // edge weights drawn uniformly from 1..max_weight
    double propensity_sigma = 1.0; // node-activity spread (lognormal); 0 = homogeneous
    double volume_sigma = 0.4;     // per-tick global volume swing (lognormal); 0 = flat
    // Mixed events alternate between cliques of varying size (drawn from
    // [clique_size/2, clique_size]) and diffuse rate surges over a larger
    // node subset. Detectors then catch different event subsets, the way
    // heterogeneous detectors behave on real data.
    bool mixed_events = false;
    // Per-node slow rate waves: stationary AR(1) (coefficient 0.9) on the
    // log rate with this innovation scale. Smooth drifts read differently
    // to each detector, decorrelating their background scores.
    double node_wave_sigma = 0.0;
};

// Desk-scale benchmark data: background graphs from a stationary random
// process with heterogeneous per-node rates (a lognormal propensity gives a
// stable hub structure) and a fluctuating global volume (communication
// graphs breathe tick to tick), plus a dense clique planted among a random
// node subset at every event tick. The volume mode gives subspace trackers
// a dominant normal direction, so planted events land in the residual. Edge
// weights are small integer counts so weighted and unweighted degree
// features carry genuinely different series.
inline std::pair<TemporalGraphSequence, EventTruth> make_synthetic(
    std::size_t n_nodes, std::size_t T, const std::vector<std::size_t>& events,
    std::uint64_t seed, const SynthParams& p = {}) {
    if (events.empty()) {
        throw validation_error("make_synthetic: need at least one event tick");
    }
    for (std::size_t e : events) {
        if (e >= T) {
            throw validation_error("make_synthetic: event tick " + std::to_string(e) +
                                   " outside [0," + std::to_string(T) + ")");
        }
    }
    if (n_nodes < p.clique_size || n_nodes < 2 || T < 2) {
        throw validation_error("make_synthetic: degenerate size parameters");
    }
    TemporalGraphSequence g;
    g.directed = false;
    g.node_ids.reserve(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) g.node_ids.push_back("n" + std::to_string(i));
    g.timestamps.resize(T);
    std::iota(g.timestamps.begin(), g.timestamps.end(), 0LL);
    g.snapshots.resize(T);

    std::vector<bool> is_event(T, false);
    std::vector<std::size_t> event_index(T, 0);
    {
        auto ordered = events;
        std::sort(ordered.begin(), ordered.end());
        for (std::size_t i = 0; i < ordered.size(); ++i) {
            is_event[ordered[i]] = true;
            event_index[ordered[i]] = i;
        }
    }

    Rng rng(seed);
    const auto draw_weight = [&]() {
        return p.max_weight <= 1
                   ? 1.0
                   : static_cast<double>(1 + rng.below(static_cast<std::size_t>(p.max_weight)));
    };
    // stationary per-node rates, normalized so the mean pair probability
    // stays at edge_prob
    std::vector<double> propensity(n_nodes, 1.0);
    if (p.propensity_sigma > 0.0) {
        double total = 0.0;
        for (auto& a : propensity) {
            a = std::exp(p.propensity_sigma * rng.gaussian());
            total += a;
        }
        for (auto& a : propensity) a *= static_cast<double>(n_nodes) / total;
    }
    std::vector<double> wave(n_nodes, 0.0);
    constexpr double kWaveAr = 0.9;
    if (p.node_wave_sigma > 0.0) {
        // start the AR(1) waves in their stationary distribution
        for (auto& w : wave) w = p.node_wave_sigma * rng.gaussian();
    }
    for (std::size_t t = 0; t < T; ++t) {
        auto& snap = g.snapshots[t];
        double volume = 1.0;
        if (p.volume_sigma > 0.0) {
            volume = std::exp(p.volume_sigma * rng.gaussian() -
                              0.5 * p.volume_sigma * p.volume_sigma);
        }
        std::vector<double> rate(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            double m = 1.0;
            if (p.node_wave_sigma > 0.0) {
                wave[i] = kWaveAr * wave[i] +
                          p.node_wave_sigma * std::sqrt(1.0 - kWaveAr * kWaveAr) *
                              rng.gaussian();
                m = std::exp(wave[i] - 0.5 * p.node_wave_sigma * p.node_wave_sigma);
            }
            rate[i] = propensity[i] * m;
        }
        for (std::size_t i = 0; i < n_nodes; ++i) {
            for (std::size_t j = i + 1; j < n_nodes; ++j) {
                const double pij = std::min(0.9, p.edge_prob * volume * rate[i] * rate[j]);
                if (rng.uniform() < pij) {
                    snap.push_back(Edge{static_cast<std::uint32_t>(i),
                                        static_cast<std::uint32_t>(j), draw_weight()});
                }
            }
        }
        if (is_event[t]) {
            const bool surge = p.mixed_events && (event_index[t] % 2 == 1);
            if (surge) {
                // diffuse burst: a wider subset gains extra random contacts
                const std::size_t width = std::min(n_nodes, 3 * p.clique_size);
                const auto members = rng.sample_indices(n_nodes, width);
                for (std::size_t s : members) {
                    const std::size_t extra = 1 + rng.below(3);
                    for (std::size_t e = 0; e < extra; ++e) {
                        std::size_t other = rng.below(n_nodes);
                        if (other == s) other = (other + 1) % n_nodes;
                        Edge edge{static_cast<std::uint32_t>(s),
                                  static_cast<std::uint32_t>(other), draw_weight()};
                        if (edge.src > edge.dst) std::swap(edge.src, edge.dst);
                        snap.push_back(edge);
                    }
                }
            } else {
                std::size_t size = p.clique_size;
                if (p.mixed_events && p.clique_size >= 4) {
                    const std::size_t lo = p.clique_size / 2;
                    size = lo + rng.below(p.clique_size - lo + 1);
                }
                const auto members = rng.sample_indices(n_nodes, size);
                for (std::size_t a = 0; a < members.size(); ++a) {
                    for (std::size_t b = a + 1; b < members.size(); ++b) {
                        snap.push_back(Edge{static_cast<std::uint32_t>(members[a]),
                                            static_cast<std::uint32_t>(members[b]),
                                            draw_weight()});
                    }
                }
            }
        }
    }
    EventTruth truth;
    truth.event_ticks = events;
    std::sort(truth.event_ticks.begin(), truth.event_ticks.end());
    return {std::move(g), std::move(truth)};
}

struct NoiseSweepRow {
    std::string strategy;
    std::size_t k = 0;
    double mean_ap = 0.0;
};

// The noise experiment: for each strategy and k = 0..kmax, append k shuffled
// lists to the base components, run the two-phase ensemble, and average the
// final AP (delay 0) over seeded repeats. Noise lists nest across k within a
// repeat, so the sweep isolates the effect of adding noise.
inline std::vector<NoiseSweepRow> noise_sweep(const std::vector<ScoreList>& base,
                                              const EventTruth& truth,
                                              const std::vector<Strategy>& strategies,
                                              std::size_t kmax, std::size_t repeats,
                                              std::uint64_t seed, const PipelineConfig& cfg) {
    if (repeats == 0) {
        throw validation_error("noise_sweep: repeats must be >= 1");
    }
    std::vector<std::vector<double>> acc(strategies.size(),
                                         std::vector<double>(kmax + 1, 0.0));
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        CalibrationCache cache;  // noise ids are stable within one repeat
        const auto with_noise = inject_noise(base, kmax, derive_seed(seed, rep));
        for (std::size_t si = 0; si < strategies.size(); ++si) {
            PipelineConfig c = cfg;
            c.strategy.kind = strategies[si];
            c.phase2_strategy.reset();
            for (std::size_t k = 0; k <= kmax; ++k) {
                std::vector<ScoreList> lists(with_noise.begin(),
                                             with_noise.begin() +
                                                 static_cast<std::ptrdiff_t>(base.size() + k));
                const auto r = run_ensemble(lists, c, &cache);
                acc[si][k] += average_precision(r.final_ranks, truth, 0);
            }
        }
    }
    std::vector<NoiseSweepRow> rows;
    for (std::size_t si = 0; si < strategies.size(); ++si) {
        for (std::size_t k = 0; k <= kmax; ++k) {
            rows.push_back(NoiseSweepRow{strategy_name(strategies[si]), k,
                                         acc[si][k] / static_cast<double>(repeats)});
        }
    }
    return rows;
}

} // namespace selens
