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
#include <set>

#include "oracles.hpp"
#include "selens/calibration.hpp"
#include "selens/random.hpp"
#include "selens/selection.hpp"

using namespace selens;

namespace {

constexpr std::size_t kT = 200;
const std::vector<std::size_t> kTruth = {20, 60, 100, 140, 180};

// well-separated planted spikes over light background noise
ScoreList accurate_list(const std::string& id, Rng& rng) {
    ScoreList s;
    s.id = id;
    s.scores.resize(kT);
    for (auto& x : s.scores) x = rng.uniform(0.0, 1.0);
    for (std::size_t t : kTruth) s.scores[t] = 9.0 + rng.uniform(0.0, 2.0);
    return s;
}

ScoreList shuffled_copy(const ScoreList& src, const std::string& id, Rng& rng) {
    ScoreList s = src;
    s.id = id;
    rng.shuffle(s.scores);
    return s;
}

ScoreList reversed_copy(const ScoreList& src, const std::string& id) {
    ScoreList s = src;
    s.id = id;
    const double hi = *std::max_element(src.scores.begin(), src.scores.end());
    const double lo = *std::min_element(src.scores.begin(), src.scores.end());
    for (auto& x : s.scores) x = hi + lo - x;  // exact rank reversal
    return s;
}

bool selected_contains(const SelectionResult& r, const std::string& id) {
    return std::find(r.selected.begin(), r.selected.end(), id) != r.selected.end();
}

} // namespace

// --- weighted Pearson --------------------------------------------------------

TEST_CASE("weighted pearson: self correlation and perfect anticorrelation") {
    CHECK(weighted_pearson({1, 2, 3}, {1, 2, 3}, {1, 1, 1}) == Catch::Approx(1.0));
    CHECK(weighted_pearson({1, 2, 3}, {3, 2, 1}, {1, 1, 1}) == Catch::Approx(-1.0));
}

TEST_CASE("weighted pearson: matches the direct formula") {
    const std::vector<double> x = {1, 2, 3};
    const std::vector<double> y = {1, 3, 2};
    const std::vector<double> w = {1.0, 0.5, 1.0 / 3.0};
    const double got = weighted_pearson(x, y, w);
    const double want = static_cast<double>(oracles::weighted_pearson(x, y, w));
    CHECK(got == Catch::Approx(want).margin(1e-12));

    Rng rng(101);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> rx(10), ry(10), rw(10);
        for (std::size_t i = 0; i < 10; ++i) {
            rx[i] = rng.uniform(-5.0, 5.0);
            ry[i] = rng.uniform(-5.0, 5.0);
            rw[i] = rng.uniform(0.01, 2.0);
        }
        CHECK(weighted_pearson(rx, ry, rw) ==
              Catch::Approx(static_cast<double>(oracles::weighted_pearson(rx, ry, rw)))
                  .margin(1e-12));
    }
}

TEST_CASE("weighted pearson: constant input is an undefined correlation") {
    CHECK_THROWS_AS(weighted_pearson({2, 2, 2}, {1, 2, 3}, {1, 1, 1}),
                    undefined_correlation_error);
    CHECK_FALSE(try_weighted_pearson({1, 2, 3}, {5, 5, 5}, {1, 1, 1}).has_value());
    // constant only off the weight support is fine
    CHECK_NOTHROW(weighted_pearson({2, 2, 1}, {1, 2, 3}, {0, 1, 1}));
}

// --- binomial order probability ----------------------------------------------

TEST_CASE("binomial order probability: exact anchors") {
    CHECK(binomial_order_prob({0.3}, 1, 1) == Catch::Approx(0.3).margin(1e-12));
    CHECK(binomial_order_prob({0.2, 0.5, 0.9}, 2, 3) == Catch::Approx(0.5).margin(1e-12));
    CHECK(binomial_order_prob({0.0, 0.4}, 1, 2) == 0.0);
}

TEST_CASE("binomial order probability: validates its inputs") {
    CHECK_THROWS_AS(binomial_order_prob({0.3}, 0, 1), validation_error);
    CHECK_THROWS_AS(binomial_order_prob({0.3}, 2, 1), validation_error);
    CHECK_THROWS_AS(binomial_order_prob({0.5, 0.2}, 1, 2), validation_error);
    CHECK_THROWS_AS(binomial_order_prob({0.5, 0.7}, 1, 3), validation_error);
}

TEST_CASE("binomial order probability: monotone in r and consistent in log domain") {
    Rng rng(103);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t m = 1 + rng.below(6);
        const std::size_t l = 1 + rng.below(m);
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        const double lo = std::min(r1, r2), hi = std::max(r1, r2);
        CHECK(binomial_rank_tail(l, m, lo) <= binomial_rank_tail(l, m, hi) + 1e-12);
    }
    // closed forms hold for large m (log-domain path)
    for (double r : {0.1, 0.4, 0.8}) {
        CHECK(binomial_rank_tail(1, 40, r) ==
              Catch::Approx(1.0 - std::pow(1.0 - r, 40)).margin(1e-10));
        CHECK(binomial_rank_tail(40, 40, r) == Catch::Approx(std::pow(r, 40)).margin(1e-10));
    }
}

// --- vertical selection --------------------------------------------------------

TEST_CASE("vertical: single list is selected") {
    Rng rng(107);
    const auto res = select_vertical({accurate_list("a", rng)});
    CHECK(res.selected == std::vector<std::string>{"a"});
}

TEST_CASE("vertical: duplicates add nothing under strict improvement") {
    Rng rng(109);
    auto base = accurate_list("a", rng);
    auto b = base, c = base;
    b.id = "b";
    c.id = "c";
    const auto res = select_vertical({base, b, c});
    CHECK(res.selected.size() == 1);
}

TEST_CASE("vertical: shuffled lists are excluded on the planted toy") {
    std::size_t good = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(1000 + seed);
        std::vector<ScoreList> lists;
        for (int i = 0; i < 4; ++i) lists.push_back(accurate_list("acc" + std::to_string(i), rng));
        lists.push_back(shuffled_copy(lists[0], "shuf0", rng));
        lists.push_back(shuffled_copy(lists[1], "shuf1", rng));
        const auto res = select_vertical(lists);
        CHECK(res.selected.size() >= 1);
        if (!selected_contains(res, "shuf0") && !selected_contains(res, "shuf1")) ++good;
    }
    CHECK(good >= 9);
}

TEST_CASE("vertical: prediction correlation never decreases and beats the seed") {
    Rng rng(113);
    std::vector<ScoreList> lists;
    for (int i = 0; i < 5; ++i) lists.push_back(accurate_list("l" + std::to_string(i), rng));
    lists.push_back(shuffled_copy(lists[2], "noise", rng));
    const auto res = select_vertical(lists);

    // recompute the final prediction correlation with the stored target
    const auto ranks = ranks_of(rank_from_scores(res.target));
    std::vector<double> w(res.target.size());
    for (std::size_t t = 0; t < w.size(); ++t) w[t] = 1.0 / static_cast<double>(ranks[t]);
    CalibrationCache cc;
    std::vector<double> pred(res.target.size(), 0.0);
    for (const auto& id : res.selected) {
        const auto it = std::find_if(lists.begin(), lists.end(),
                                     [&](const ScoreList& s) { return s.id == id; });
        REQUIRE(it != lists.end());
        const auto& probs = cc.get_unified(*it).probs;
        for (std::size_t t = 0; t < pred.size(); ++t) pred[t] += probs[t];
    }
    for (auto& v : pred) v /= static_cast<double>(res.selected.size());
    const double final_corr = weighted_pearson(pred, res.target, w);
    const double seed_corr =
        weighted_pearson(cc.get_unified(*std::find_if(lists.begin(), lists.end(),
                                                      [&](const ScoreList& s) {
                                                          return s.id == res.selected[0];
                                                      }))
                             .probs,
                         res.target, w);
    CHECK(final_corr >= seed_corr - 1e-12);
}

TEST_CASE("vertical: a duplicate of a selected list is itself never selected") {
    // The duplicate participates in the pseudo ground truth (the target is
    // the average over *all* unified lists), so marginal decisions on other
    // candidates may legitimately move; the strict-improvement rule however
    // guarantees the duplicate itself adds nothing and is always discarded.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(2000 + seed);
        std::vector<ScoreList> lists;
        for (int i = 0; i < 4; ++i) lists.push_back(accurate_list("a" + std::to_string(i), rng));
        lists.push_back(shuffled_copy(lists[0], "s0", rng));
        const auto res1 = select_vertical(lists);

        auto dup = *std::find_if(lists.begin(), lists.end(),
                                 [&](const ScoreList& s) { return s.id == res1.selected[0]; });
        dup.id = "zz-dup";
        auto augmented = lists;
        augmented.push_back(dup);
        const auto res2 = select_vertical(augmented);
        CHECK_FALSE(selected_contains(res2, "zz-dup"));
    }
}

TEST_CASE("vertical: duplicating an identical profile leaves the prediction unchanged") {
    // with exact clones the target is unchanged by the duplicate, so the
    // final prediction vector is bit-identical
    Rng rng(2100);
    const auto base = accurate_list("a", rng);
    auto b = base, c = base, d = base;
    b.id = "b";
    c.id = "c";
    d.id = "d";
    const auto res1 = select_vertical({base, b, c});
    const auto res2 = select_vertical({base, b, c, d});
    REQUIRE(res1.selected == res2.selected);
    for (std::size_t t = 0; t < kT; ++t) {
        CHECK(res1.target[t] == Catch::Approx(res2.target[t]).margin(1e-15));
    }
}

// --- diverse selection ---------------------------------------------------------

TEST_CASE("diverse: single list is selected") {
    Rng rng(127);
    const auto res = select_diverse({accurate_list("a", rng)});
    CHECK(res.selected == std::vector<std::string>{"a"});
}

TEST_CASE("diverse: least-correlated candidate comes first") {
    Rng rng(131);
    auto a = accurate_list("a", rng);
    auto b = a;
    b.id = "b";
    const auto anti = reversed_copy(a, "anti");
    const auto res = select_diverse({a, b, anti});
    // ascending ordering at the seed step: the anticorrelated list leads
    REQUIRE_FALSE(res.diagnostics.empty());
    CHECK(res.diagnostics[0].first == "anti");
    CHECK(res.selected[0] == "anti");
}

TEST_CASE("diverse retains at least as many shuffled lists as vertical") {
    double div_total = 0, vert_total = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(3000 + seed);
        std::vector<ScoreList> lists;
        for (int i = 0; i < 4; ++i) lists.push_back(accurate_list("a" + std::to_string(i), rng));
        for (int i = 0; i < 3; ++i) {
            lists.push_back(shuffled_copy(lists[static_cast<std::size_t>(i)],
                                          "shuf" + std::to_string(i), rng));
        }
        const auto dv = select_diverse(lists);
        const auto vt = select_vertical(lists);
        auto count_shuf = [](const SelectionResult& r) {
            double n = 0;
            for (const auto& id : r.selected) {
                if (id.rfind("shuf", 0) == 0) n += 1;
            }
            return n;
        };
        div_total += count_shuf(dv);
        vert_total += count_shuf(vt);
    }
    CHECK(div_total >= vert_total);
}

// --- horizontal selection --------------------------------------------------------

TEST_CASE("horizontal: identical lists are all retained") {
    Rng rng(137);
    const auto base = accurate_list("x", rng);
    std::vector<ScoreList> lists;
    for (int i = 0; i < 5; ++i) {
        auto s = base;
        s.id = "x" + std::to_string(i);
        lists.push_back(std::move(s));
    }
    const auto res = select_horizontal(lists);
    CHECK(res.selected.size() == 5);
    REQUIRE_FALSE(res.target_ticks.empty());
    // identical lists: every strike count is zero
    for (const auto& [id, count] : res.diagnostics) CHECK(count == 0.0);
}

TEST_CASE("horizontal: a fully reversed list is discarded") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(4000 + seed);
        std::vector<ScoreList> lists;
        for (int i = 0; i < 5; ++i) lists.push_back(accurate_list("a" + std::to_string(i), rng));
        lists.push_back(reversed_copy(lists[0], "rev"));
        const auto res = select_horizontal(lists);
        CHECK_FALSE(selected_contains(res, "rev"));
        CHECK(res.selected.size() >= 1);
    }
}

TEST_CASE("horizontal: needs two lists and falls back when no majority emerges") {
    Rng rng(139);
    CHECK_THROWS_AS(select_horizontal({accurate_list("a", rng)}), validation_error);

    // constant lists label nothing; majority set O is empty
    std::vector<ScoreList> flat;
    for (int i = 0; i < 3; ++i) {
        ScoreList s;
        s.id = "flat" + std::to_string(i);
        s.scores.assign(30, 1.0);
        flat.push_back(std::move(s));
    }
    const auto res = select_horizontal(flat);
    CHECK(res.selected.size() == 3);
    REQUIRE_FALSE(res.warnings.empty());
}

TEST_CASE("horizontal: count clustering edge cases") {
    using selens::detail::split_counts_high;
    // all zero: nothing discarded
    CHECK(split_counts_high({0, 0, 0}, 10) == std::vector<bool>{false, false, false});
    // all equal and non-zero: degenerate, keep everything
    CHECK(split_counts_high({4, 4, 4}, 10) == std::vector<bool>{false, false, false});
    // one outstanding count among zeros: the high cluster when it covers
    // most anomalies, retained when it is only a few strikes
    CHECK(split_counts_high({0, 7, 0}, 10) == std::vector<bool>{false, true, false});
    CHECK(split_counts_high({0, 2, 0}, 10) == std::vector<bool>{false, false, false});
    // clear separation
    CHECK(split_counts_high({1, 2, 9, 0, 10}, 10) ==
          std::vector<bool>{false, false, true, false, true});
}

TEST_CASE("horizontal: zero-count lists always survive") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(5000 + seed);
        std::vector<ScoreList> lists;
        for (int i = 0; i < 6; ++i) lists.push_back(accurate_list("a" + std::to_string(i), rng));
        lists.push_back(shuffled_copy(lists[0], "sh", rng));
        const auto res = select_horizontal(lists);
        CHECK_FALSE(res.selected.empty());
        for (const auto& [id, count] : res.diagnostics) {
            if (count == 0.0) CHECK(selected_contains(res, id));
        }
    }
}

// --- full / random -----------------------------------------------------------

TEST_CASE("select_all keeps input order") {
    Rng rng(149);
    std::vector<ScoreList> lists;
    for (int i = 0; i < 5; ++i) lists.push_back(accurate_list("l" + std::to_string(i), rng));
    const auto res = select_all(lists);
    CHECK(res.selected == std::vector<std::string>{"l0", "l1", "l2", "l3", "l4"});
}

TEST_CASE("select_random: reproducible subsets with valid k") {
    Rng rng(151);
    std::vector<ScoreList> lists;
    for (int i = 0; i < 6; ++i) lists.push_back(accurate_list("l" + std::to_string(i), rng));
    const auto a = select_random(lists, 3, 77);
    const auto b = select_random(lists, 3, 77);
    CHECK(a.selected == b.selected);
    CHECK(a.selected.size() == 3);
    const auto full = select_random(lists, 6, 12);
    CHECK(std::set<std::string>(full.selected.begin(), full.selected.end()).size() == 6);
    CHECK_THROWS_AS(select_random(lists, 0, 1), validation_error);
    CHECK_THROWS_AS(select_random(lists, 7, 1), validation_error);
}
