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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "selens/detectors/maed.hpp"
#include "selens/evaluation.hpp"
#include "selens/random.hpp"

using namespace selens;

namespace {
RankList rl(std::vector<std::size_t> order) {
    RankList r;
    r.order = std::move(order);
    return r;
}

EventTruth truth_of(std::vector<std::size_t> ticks) {
    EventTruth t;
    t.event_ticks = std::move(ticks);
    return t;
}
} // namespace

TEST_CASE("average precision: perfect ranking scores 1") {
    const auto r = rl({2, 5, 0, 1, 3, 4});
    CHECK(average_precision(r, truth_of({2, 5})) == Catch::Approx(1.0));
}

TEST_CASE("average precision: single positive at rank two") {
    const auto r = rl({0, 1, 2});
    CHECK(average_precision(r, truth_of({1})) == Catch::Approx(0.5));
}

TEST_CASE("average precision: delay window counts near misses") {
    const auto r = rl({4, 0, 1, 2, 3, 5});
    CHECK(average_precision(r, truth_of({5}), 0) < 1.0);
    // with delay 1, tick 4 lies inside [4,6] and now leads the ranking
    CHECK(average_precision(r, truth_of({5}), 1) > average_precision(r, truth_of({5}), 0));
}

TEST_CASE("average precision: empty truth and out-of-range ticks are invalid") {
    const auto r = rl({0, 1, 2});
    CHECK_THROWS_AS(average_precision(r, truth_of({}), 0), validation_error);
    CHECK_THROWS_AS(average_precision(r, truth_of({9}), 0), validation_error);
}

TEST_CASE("average precision: invariant under all-negative tail permutations") {
    Rng rng(211);
    const auto truth = truth_of({1, 4});
    std::vector<std::size_t> head = {4, 1};          // all positives first
    std::vector<std::size_t> tail = {0, 2, 3, 5, 6}; // negatives
    const double base = average_precision(rl({4, 1, 0, 2, 3, 5, 6}), truth);
    for (int rep = 0; rep < 10; ++rep) {
        auto t = tail;
        rng.shuffle(t);
        std::vector<std::size_t> order = head;
        order.insert(order.end(), t.begin(), t.end());
        CHECK(average_precision(rl(std::move(order)), truth) == Catch::Approx(base));
    }
}

TEST_CASE("average precision: mean over random instances grows with the delay") {
    Rng rng(223);
    const std::size_t T = 50;
    double mean_d0 = 0, mean_d2 = 0;
    const int n = 1000;
    for (int rep = 0; rep < n; ++rep) {
        std::vector<std::size_t> order(T);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        std::vector<std::size_t> ev;
        while (ev.size() < 4) {
            const std::size_t e = rng.below(T);
            if (std::find(ev.begin(), ev.end(), e) == ev.end()) ev.push_back(e);
        }
        const auto truth = truth_of(ev);
        const auto r = rl(std::move(order));
        mean_d0 += average_precision(r, truth, 0);
        mean_d2 += average_precision(r, truth, 2);
    }
    CHECK(mean_d2 / n >= mean_d0 / n);
}

TEST_CASE("inject_noise: k=0 is a no-op and equal seeds agree") {
    Rng rng(227);
    std::vector<ScoreList> lists(2);
    lists[0].id = "a";
    lists[1].id = "b";
    lists[0].scores.resize(30);
    lists[1].scores.resize(30);
    for (auto& x : lists[0].scores) x = rng.uniform();
    for (auto& x : lists[1].scores) x = rng.uniform();

    CHECK(inject_noise(lists, 0, 1).size() == 2);
    const auto n1 = inject_noise(lists, 3, 42);
    const auto n2 = inject_noise(lists, 3, 42);
    REQUIRE(n1.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(n1[i].scores == n2[i].scores);
    CHECK(n1[2].id == "noise-0");
    // nesting: the first noise list of a larger sweep equals the smaller one
    const auto n3 = inject_noise(lists, 1, 42);
    CHECK(n3[2].scores == n1[2].scores);
}

TEST_CASE("inject_noise: shuffled lists score near the positive prevalence") {
    const std::size_t T = 500;  // large enough that E[AP] ~ prevalence
    std::vector<std::size_t> events;
    for (std::size_t i = 0; i < 50; ++i) events.push_back(i * 10 + 3);
    const auto truth = truth_of(events);
    ScoreList base;
    base.id = "base";
    base.scores.resize(T);
    for (std::size_t t = 0; t < T; ++t) base.scores[t] = static_cast<double>(T - t);
    double mean_ap = 0.0;
    const int n = 200;
    for (int rep = 0; rep < n; ++rep) {
        const auto lists = inject_noise({base}, 1, 700 + static_cast<std::uint64_t>(rep));
        mean_ap += average_precision(rank_from_scores(lists[1].scores), truth, 0);
    }
    mean_ap /= n;
    CHECK(mean_ap == Catch::Approx(0.1).margin(0.03));
}

TEST_CASE("z gain formula and degenerate sigma flag") {
    CHECK(z_gain_of(0.5, 0.5, 0.1) == Catch::Approx(0.0));
    CHECK(z_gain_of(0.7, 0.5, 0.1) == Catch::Approx(2.0));
}

TEST_CASE("make_synthetic: validation and determinism") {
    CHECK_THROWS_AS(make_synthetic(50, 100, {}, 1), validation_error);
    CHECK_THROWS_AS(make_synthetic(50, 100, {100}, 1), validation_error);
    const auto [g1, t1] = make_synthetic(40, 60, {20, 45}, 9);
    const auto [g2, t2] = make_synthetic(40, 60, {20, 45}, 9);
    REQUIRE(g1.ticks() == 60);
    CHECK(t1.event_ticks == std::vector<std::size_t>{20, 45});
    for (std::size_t t = 0; t < 60; ++t) {
        REQUIRE(g1.snapshots[t].size() == g2.snapshots[t].size());
        for (std::size_t e = 0; e < g1.snapshots[t].size(); ++e) {
            CHECK(g1.snapshots[t][e].src == g2.snapshots[t][e].src);
            CHECK(g1.snapshots[t][e].dst == g2.snapshots[t][e].dst);
        }
    }
}

TEST_CASE("make_synthetic: planted clique lights up MAED") {
    const auto [g, truth] = make_synthetic(100, 120, {50}, 31337);
    const auto fm = extract_features(g, Feature::unweighted_deg);
    const auto s = maed(fm);
    std::vector<double> background;
    for (std::size_t t = s.valid_from; t < s.size(); ++t) {
        if (t != 50) background.push_back(s.scores[t]);
    }
    std::sort(background.begin(), background.end());
    const double q95 = background[static_cast<std::size_t>(0.95 * background.size())];
    CHECK(s.scores[50] > q95);
}

TEST_CASE("significance_vs_random: deterministic and sane on the planted toy") {
    const auto [g, truth] = make_synthetic(60, 80, {30, 55, 70}, 5);
    PipelineConfig cfg;
    cfg.detectors = {Detector::ased, Detector::maed, Detector::spirit};
    cfg.features = {Feature::unweighted_deg, Feature::weighted_deg};
    cfg.strategy.kind = Strategy::vertical;
    cfg.consensus_set = {ConsensusMethod::inverse_rank, ConsensusMethod::rra,
                         ConsensusMethod::uni_avg};

    const auto r1 = significance_vs_random(g, cfg, truth, 20, 99);
    const auto r2 = significance_vs_random(g, cfg, truth, 20, 99);
    CHECK(r1.rand_mu == r2.rand_mu);
    CHECK(r1.rand_sigma == r2.rand_sigma);
    CHECK(r1.k1 >= 1);
    CHECK(r1.trials == 20);
    if (r1.z_defined) {
        CHECK(r1.z_gain ==
              Catch::Approx(z_gain_of(r1.ap_by_delay.at(0), r1.rand_mu, r1.rand_sigma)));
    }

    PipelineConfig bad = cfg;
    bad.strategy.kind = Strategy::full;
    CHECK_THROWS_AS(significance_vs_random(g, bad, truth, 10, 1), validation_error);
    CHECK_THROWS_AS(significance_vs_random(g, cfg, truth, 1, 1), validation_error);
}
