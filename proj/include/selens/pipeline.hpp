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

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selens/calibration.hpp"
#include "selens/common.hpp"
#include "selens/consensus.hpp"
#include "selens/detectors/detectors.hpp"
#include "selens/features.hpp"
#include "selens/graph.hpp"
#include "selens/random.hpp"
#include "selens/selection.hpp"
#include "selens/types.hpp"

namespace selens {

enum class Strategy { full, vertical, horizontal, diverse, random };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::full: return "full";
        case Strategy::vertical: return "vertical";
        case Strategy::horizontal: return "horizontal";
        case Strategy::diverse: return "diverse";
        case Strategy::random: return "random";
    }
    return "?";
}

inline Strategy parse_strategy(const std::string& s) {
    if (s == "full") return Strategy::full;
    if (s == "vertical") return Strategy::vertical;
    if (s == "horizontal") return Strategy::horizontal;
    if (s == "diverse") return Strategy::diverse;
    if (s == "random") return Strategy::random;
    throw config_error("unknown strategy '" + s + "'");
}

struct StrategySpec {
    Strategy kind = Strategy::full;
    std::size_t k1 = 0;  // random strategy: subset size per phase
    std::size_t k2 = 0;
    std::uint64_t seed = 0;
};

enum class ConsensusMethod { inverse_rank, kemeny_young, rra, uni_avg, uni_max, mm_avg, mm_max };

inline const char* consensus_name(ConsensusMethod c) {
    switch (c) {
        case ConsensusMethod::inverse_rank: return "InverseRank";
        case ConsensusMethod::kemeny_young: return "KemenyYoung";
        case ConsensusMethod::rra: return "RRA";
        case ConsensusMethod::uni_avg: return "Uni(avg)";
        case ConsensusMethod::uni_max: return "Uni(max)";
        case ConsensusMethod::mm_avg: return "MM(avg)";
        case ConsensusMethod::mm_max: return "MM(max)";
    }
    return "?";
}

inline ConsensusMethod parse_consensus(const std::string& s) {
    if (s == "inverse_rank" || s == "InverseRank") return ConsensusMethod::inverse_rank;
    if (s == "kemeny_young" || s == "KemenyYoung") return ConsensusMethod::kemeny_young;
    if (s == "rra" || s == "RRA") return ConsensusMethod::rra;
    if (s == "uni_avg" || s == "Uni(avg)") return ConsensusMethod::uni_avg;
    if (s == "uni_max" || s == "Uni(max)") return ConsensusMethod::uni_max;
    if (s == "mm_avg" || s == "MM(avg)") return ConsensusMethod::mm_avg;
    if (s == "mm_max" || s == "MM(max)") return ConsensusMethod::mm_max;
    throw config_error("unknown consensus method '" + s + "'");
}

inline const std::vector<ConsensusMethod>& all_consensus_methods() {
    static const std::vector<ConsensusMethod> all = {
        ConsensusMethod::inverse_rank, ConsensusMethod::kemeny_young, ConsensusMethod::rra,
        ConsensusMethod::uni_avg,      ConsensusMethod::uni_max,      ConsensusMethod::mm_avg,
        ConsensusMethod::mm_max};
    return all;
}

struct PipelineConfig {
    std::vector<Detector> detectors = {Detector::ebed, Detector::ptsad, Detector::spirit,
                                       Detector::ased, Detector::maed};
    std::vector<Feature> features = {Feature::weighted_deg, Feature::unweighted_deg};
    DetectorParams params;
    StrategySpec strategy;
    std::optional<StrategySpec> phase2_strategy;  // defaults to the phase-1 strategy
    std::vector<ConsensusMethod> consensus_set = all_consensus_methods();
    KemenyMode kemeny_mode = KemenyMode::automatic;
    bool rra_bonferroni = true;
    std::uint64_t master_seed = 0;
};

struct ConsensusEntry {
    ConsensusMethod method = ConsensusMethod::inverse_rank;
    std::string id;
    ScoreList scores;  // natural orientation (RRA: rho, lower = more anomalous)
    RankList ranks;
};

struct PipelineReport {
    std::vector<ScoreList> components;
    SelectionResult phase1;
    std::string phase1_strategy;
    std::vector<ConsensusEntry> consensus;
    SelectionResult phase2;
    std::string phase2_strategy;
    RankList final_ranks;
    ScoreList final_scores;
    double seconds = 0.0;  // wall time; not serialized (outputs stay reproducible)
};

namespace detail {

inline SelectionResult apply_strategy(const StrategySpec& spec, int phase,
                                      const std::vector<ScoreList>& lists,
                                      CalibrationCache* cache) {
    switch (spec.kind) {
        case Strategy::full: return select_all(lists);
        case Strategy::vertical: return select_vertical(lists, cache);
        case Strategy::horizontal: return select_horizontal(lists, cache);
        case Strategy::diverse: return select_diverse(lists, cache);
        case Strategy::random: {
            const std::size_t k = phase == 1 ? spec.k1 : spec.k2;
            return select_random(lists, k, derive_seed(spec.seed, static_cast<std::uint64_t>(phase)));
        }
    }
    throw config_error("unknown strategy");
}

template <typename Fn>
inline auto named_component(const std::string& id, Fn&& fn) {
    try {
        return fn();
    } catch (const validation_error& e) {
        throw validation_error(id + ": " + e.what());
    } catch (const config_error& e) {
        throw config_error(id + ": " + e.what());
    }
}

} // namespace detail

// Step 1: every detector x feature combination. PTSAD is skipped on
// weighted features unless rounding to counts is enabled (count models need
// counts). A failing detector aborts the run with the component named.
inline std::vector<ScoreList> run_detectors(const TemporalGraphSequence& g,
                                            const PipelineConfig& cfg) {
    std::vector<ScoreList> out;
    for (Feature f : cfg.features) {
        const FeatureMatrix fm = extract_features(g, f);
        for (Detector d : cfg.detectors) {
            if (d == Detector::ptsad && feature_is_weighted(f) &&
                !cfg.params.ptsad.round_to_counts) {
                continue;
            }
            const std::string id = component_id(d, f);
            out.push_back(
                detail::named_component(id, [&] { return run_detector(d, fm, cfg.params); }));
        }
    }
    if (out.empty()) {
        throw config_error("no detector x feature combinations to run");
    }
    return out;
}

// Steps 2-5 on a prepared set of score lists: phase-1 selection, the chosen
// consensus methods on the survivors, phase-2 selection over the consensus
// scores (oriented so higher = more anomalous), and a final inverse-rank
// combination. `cache` may memoize calibrations of the *input* lists across
// repeated calls; consensus-level calibrations are always computed fresh.
inline PipelineReport run_ensemble(const std::vector<ScoreList>& lists,
                                   const PipelineConfig& cfg,
                                   CalibrationCache* cache = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    if (lists.empty()) {
        throw validation_error("run_ensemble: no score lists");
    }
    if (cfg.consensus_set.empty()) {
        throw config_error("run_ensemble: consensus set is empty");
    }
    for (std::size_t i = 0; i < lists.size(); ++i) {
        for (std::size_t j = i + 1; j < lists.size(); ++j) {
            if (lists[i].id == lists[j].id) {
                throw validation_error("duplicate component id '" + lists[i].id + "'");
            }
        }
    }

    PipelineReport rep;
    rep.components = lists;
    rep.phase1_strategy = strategy_name(cfg.strategy.kind);
    rep.phase1 = detail::apply_strategy(cfg.strategy, 1, lists, cache);

    std::vector<ScoreList> selected;
    for (const auto& s : lists) {
        if (std::find(rep.phase1.selected.begin(), rep.phase1.selected.end(), s.id) !=
            rep.phase1.selected.end()) {
            selected.push_back(s);
        }
    }

    std::vector<RankList> sel_ranks;
    sel_ranks.reserve(selected.size());
    for (const auto& s : selected) sel_ranks.push_back(rank_from_scores(s.scores));

    const std::size_t T = lists.front().size();
    std::vector<ScoreList> phase2_inputs;  // oriented: higher = more anomalous
    for (ConsensusMethod method : cfg.consensus_set) {
        ConsensusEntry entry;
        entry.method = method;
        entry.id = consensus_name(method);
        ScoreList oriented;
        oriented.id = entry.id;
        switch (method) {
            case ConsensusMethod::inverse_rank: {
                auto out = inverse_rank(sel_ranks);
                entry.scores = out.scores;
                entry.ranks = std::move(out.ranks);
                oriented.scores = entry.scores.scores;
                break;
            }
            case ConsensusMethod::kemeny_young: {
                entry.ranks = kemeny_young(sel_ranks, cfg.kemeny_mode);
                entry.scores.scores.assign(T, 0.0);
                const auto ranks = ranks_of(entry.ranks);
                for (std::size_t t = 0; t < T; ++t) {
                    entry.scores.scores[t] = static_cast<double>(T - ranks[t]);
                }
                oriented.scores = entry.scores.scores;
                break;
            }
            case ConsensusMethod::rra: {
                auto out = rra(sel_ranks, cfg.rra_bonferroni);
                entry.scores = out.scores;  // rho: lower = more anomalous
                entry.ranks = std::move(out.ranks);
                oriented.scores.assign(T, 0.0);
                for (std::size_t t = 0; t < T; ++t) {
                    oriented.scores[t] = 1.0 - entry.scores.scores[t];
                }
                break;
            }
            case ConsensusMethod::uni_avg:
            case ConsensusMethod::uni_max:
            case ConsensusMethod::mm_avg:
            case ConsensusMethod::mm_max: {
                const bool use_mm =
                    method == ConsensusMethod::mm_avg || method == ConsensusMethod::mm_max;
                const Combiner comb =
                    (method == ConsensusMethod::uni_avg || method == ConsensusMethod::mm_avg)
                        ? Combiner::avg
                        : Combiner::max;
                CalibrationCache local;
                CalibrationCache& cc = cache ? *cache : local;
                std::vector<ProbList> probs;
                probs.reserve(selected.size());
                for (const auto& s : selected) {
                    probs.push_back(detail::named_component(
                        entry.id + "/" + s.id,
                        [&] { return use_mm ? cc.get_mixture(s) : cc.get_unified(s); }));
                }
                auto out = prob_aggregate(probs, comb);
                entry.scores = out.scores;
                entry.ranks = std::move(out.ranks);
                oriented.scores = entry.scores.scores;
                break;
            }
        }
        entry.scores.id = entry.id;
        rep.consensus.push_back(std::move(entry));
        phase2_inputs.push_back(std::move(oriented));
    }

    StrategySpec p2 = cfg.phase2_strategy ? *cfg.phase2_strategy : cfg.strategy;
    rep.phase2_strategy = strategy_name(p2.kind);
    rep.phase2 = detail::apply_strategy(p2, 2, phase2_inputs, nullptr);

    std::vector<RankList> final_inputs;
    for (const auto& entry : rep.consensus) {
        if (std::find(rep.phase2.selected.begin(), rep.phase2.selected.end(), entry.id) !=
            rep.phase2.selected.end()) {
            final_inputs.push_back(entry.ranks);
        }
    }
    auto final_out = inverse_rank(final_inputs);
    rep.final_scores = std::move(final_out.scores);
    rep.final_scores.id = "final";
    rep.final_ranks = std::move(final_out.ranks);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// The whole two-phase run on raw data.
inline PipelineReport run_pipeline(const TemporalGraphSequence& g, const PipelineConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    auto lists = run_detectors(g, cfg);
    CalibrationCache cache;
    auto rep = run_ensemble(lists, cfg, &cache);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// --- report serialization -------------------------------------------------

inline nlohmann::json selection_to_json(const SelectionResult& s) {
    nlohmann::json j;
    j["selected"] = s.selected;
    j["target"] = s.target;
    j["target_ticks"] = s.target_ticks;
    nlohmann::json diag = nlohmann::json::array();
    for (const auto& [id, v] : s.diagnostics) {
        diag.push_back({{"id", id}, {"value", v}});
    }
    j["diagnostics"] = diag;
    j["warnings"] = s.warnings;
    return j;
}

inline SelectionResult selection_from_json(const nlohmann::json& j) {
    SelectionResult s;
    s.selected = j.at("selected").get<std::vector<std::string>>();
    s.target = j.at("target").get<std::vector<double>>();
    s.target_ticks = j.at("target_ticks").get<std::vector<std::size_t>>();
    for (const auto& d : j.at("diagnostics")) {
        s.diagnostics.emplace_back(d.at("id").get<std::string>(), d.at("value").get<double>());
    }
    s.warnings = j.at("warnings").get<std::vector<std::string>>();
    return s;
}

inline nlohmann::json report_to_json(const PipelineReport& rep) {
    nlohmann::json j;
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : rep.components) {
        comps.push_back({{"id", c.id}, {"valid_from", c.valid_from}, {"scores", c.scores}});
    }
    j["components"] = comps;
    j["phase1"] = selection_to_json(rep.phase1);
    j["phase1"]["strategy"] = rep.phase1_strategy;
    nlohmann::json cons = nlohmann::json::array();
    for (const auto& c : rep.consensus) {
        cons.push_back(
            {{"id", c.id}, {"scores", c.scores.scores}, {"order", c.ranks.order}});
    }
    j["consensus"] = cons;
    j["phase2"] = selection_to_json(rep.phase2);
    j["phase2"]["strategy"] = rep.phase2_strategy;
    j["final"] = {{"order", rep.final_ranks.order}, {"scores", rep.final_scores.scores}};
    return j;
}

inline PipelineReport report_from_json(const nlohmann::json& j) {
    PipelineReport rep;
    for (const auto& c : j.at("components")) {
        ScoreList s;
        s.id = c.at("id").get<std::string>();
        s.valid_from = c.at("valid_from").get<std::size_t>();
        s.scores = c.at("scores").get<std::vector<double>>();
        rep.components.push_back(std::move(s));
    }
    rep.phase1 = selection_from_json(j.at("phase1"));
    rep.phase1_strategy = j.at("phase1").value("strategy", "");
    for (const auto& c : j.at("consensus")) {
        ConsensusEntry e;
        e.id = c.at("id").get<std::string>();
        e.scores.id = e.id;
        e.scores.scores = c.at("scores").get<std::vector<double>>();
        e.ranks.order = c.at("order").get<std::vector<std::size_t>>();
        rep.consensus.push_back(std::move(e));
    }
    rep.phase2 = selection_from_json(j.at("phase2"));
    rep.phase2_strategy = j.at("phase2").value("strategy", "");
    rep.final_ranks.order = j.at("final").at("order").get<std::vector<std::size_t>>();
    rep.final_scores.id = "final";
    rep.final_scores.scores = j.at("final").at("scores").get<std::vector<double>>();
    return rep;
}

} // namespace selens
