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

#include <cmath>

#include "oracles.hpp"
#include "selens/detectors/detectors.hpp"
#include "selens/random.hpp"

using namespace selens;

namespace {

FeatureMatrix make_fm(const Eigen::MatrixXd& vals, Feature f = Feature::unweighted_deg) {
    FeatureMatrix fm;
    fm.feature = f;
    fm.values = vals;
    for (Eigen::Index i = 0; i < vals.rows(); ++i) {
        fm.node_ids.push_back("n" + std::to_string(i));
    }
    return fm;
}

long long poisson_draw(Rng& rng, double lambda) {
    // inverse transform; fine for small lambda
    const double u = rng.uniform();
    double p = std::exp(-lambda), cdf = p;
    long long k = 0;
    while (u > cdf && k < 200) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

void check_scorelist_shape(const ScoreList& s, std::size_t T) {
    REQUIRE(s.size() == T);
    for (std::size_t t = 0; t < T; ++t) {
        CHECK(std::isfinite(s.scores[t]));
        if (t < s.valid_from) CHECK(s.scores[t] == 0.0);
    }
}

} // namespace

// --- EBED ------------------------------------------------------------------

TEST_CASE("ebed: constant activity scores zero") {
    Eigen::MatrixXd v(3, 10);
    v.setConstant(4.0);
    const auto s = ebed(make_fm(v), {.window = 3});
    check_scorelist_shape(s, 10);
    for (std::size_t t = s.valid_from; t < 10; ++t) {
        CHECK(s.scores[t] == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("ebed: activity moving to a disjoint node set spikes") {
    // nodes {0,1} active for t<6, {2,3} active after
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 12);
    for (int t = 0; t < 6; ++t) {
        v(0, t) = 5.0;
        v(1, t) = 5.0;
    }
    for (int t = 6; t < 12; ++t) {
        v(2, t) = 5.0;
        v(3, t) = 5.0;
    }
    const auto s = ebed(make_fm(v), {.window = 3});
    std::size_t peak = s.valid_from;
    for (std::size_t t = s.valid_from; t < 12; ++t) {
        if (s.scores[t] > s.scores[peak]) peak = t;
    }
    CHECK(peak >= 6);
    CHECK(peak <= 8);
    CHECK(s.scores[peak] > 0.8);
    CHECK(s.scores[5] < 0.05);  // stable regime before the switch
    for (double x : s.scores) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
    }
}

TEST_CASE("ebed: window equal to T leaves no scored ticks") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(3, 6).cwiseAbs();
    const auto s = ebed(make_fm(v), {.window = 6});
    CHECK(s.valid_from == 6);
    for (double x : s.scores) CHECK(x == 0.0);
}

TEST_CASE("ebed: window larger than T is a configuration error") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(3, 4);
    CHECK_THROWS_AS(ebed(make_fm(v), {.window = 5}), config_error);
}

TEST_CASE("ebed: all-zero stretches degrade gracefully") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 10);
    v(0, 8) = 3.0;
    const auto s = ebed(make_fm(v), {.window = 2});
    check_scorelist_shape(s, 10);
    CHECK(s.scores[8] > 0.1);  // uniform reference vs concentrated activity
}

TEST_CASE("ebed: scaling the matrix does not change scores") {
    Rng rng(7);
    Eigen::MatrixXd v(4, 15);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (Eigen::Index t = 0; t < v.cols(); ++t) v(i, t) = rng.uniform(0.0, 5.0);
    }
    const auto a = ebed(make_fm(v), {.window = 4});
    const auto b = ebed(make_fm(Eigen::MatrixXd(2.5 * v)), {.window = 4});
    for (std::size_t t = 0; t < 15; ++t) {
        CHECK(a.scores[t] == Catch::Approx(b.scores[t]).margin(1e-10));
    }
}

TEST_CASE("ebed attribution guards zero activity entries") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 8);
    for (int t = 0; t < 8; ++t) v(0, t) = 2.0;  // node 0 active, 1-2 silent
    const auto a = ebed_attribute(make_fm(v), 5, {.window = 3});
    REQUIRE(a.ranked_nodes.size() == 3);
    // silent nodes have u_i == 0 -> responsibility 0
    for (std::size_t j = 0; j < 3; ++j) {
        if (a.ranked_nodes[j] != 0) CHECK(a.responsibility[j] == 0.0);
    }
    for (std::size_t j = 1; j < a.responsibility.size(); ++j) {
        CHECK(a.responsibility[j] <= a.responsibility[j - 1]);
    }
    CHECK_THROWS_AS(ebed_attribute(make_fm(v), 2, {.window = 3}), validation_error);
}

// --- PTSAD -----------------------------------------------------------------

TEST_CASE("ptsad: poisson tail matches the direct oracle") {
    const double impl = detail::poisson_tail(10, 3.0);
    const double want = static_cast<double>(oracles::poisson_tail(10, 3.0L));
    CHECK(impl == Catch::Approx(want).margin(1e-12));
    CHECK(want == Catch::Approx(1.10259e-3).margin(1e-6));  // frozen oracle value
    CHECK(detail::poisson_tail(0, 3.0) == 1.0);
}

TEST_CASE("ptsad: x=0 has p-value 1 under every model") {
    std::vector<long long> xs = {0, 2, 3, 0, 1, 4, 0, 2};
    for (auto fit : {detail::fit_poisson(xs), detail::fit_zip(xs), detail::fit_bern_ztp(xs),
                     detail::fit_markov_ztp(xs)}) {
        for (std::size_t t = 0; t < xs.size(); ++t) {
            if (xs[t] == 0) CHECK(detail::ptsad_pvalue(fit, xs, t) == 1.0);
        }
    }
}

TEST_CASE("ptsad: constant positive series gives a flat score list") {
    Eigen::MatrixXd v(1, 12);
    v.setConstant(4.0);
    const auto s = ptsad(make_fm(v));
    check_scorelist_shape(s, 12);
    for (std::size_t t = 1; t < 12; ++t) CHECK(s.scores[t] == s.scores[0]);
}

TEST_CASE("ptsad: constant series selects the simplest model") {
    std::vector<long long> xs(20, 3);
    CHECK(detail::ptsad_select_model(xs).kind == detail::CountModel::poisson);
}

TEST_CASE("ptsad: zero-heavy series prefers a sparse model") {
    Rng rng(11);
    std::vector<long long> xs(300, 0);
    for (auto& x : xs) {
        if (rng.uniform() < 0.25) x = 1 + poisson_draw(rng, 4.0);
    }
    const auto fit = detail::ptsad_select_model(xs);
    CHECK(fit.kind != detail::CountModel::poisson);
}

TEST_CASE("ptsad: spike p-value flows through the selected poisson model") {
    Rng rng(3);
    std::vector<long long> xs(240);
    for (auto& x : xs) x = poisson_draw(rng, 3.0);
    xs[100] = 10;
    const auto fit = detail::ptsad_select_model(xs);
    const double p = detail::ptsad_pvalue(fit, xs, 100);
    CHECK(p < 0.02);
    if (fit.kind == detail::CountModel::poisson) {
        const double want = static_cast<double>(oracles::poisson_tail(10, fit.lambda));
        CHECK(p == Catch::Approx(want).margin(1e-9));
    }
}

TEST_CASE("ptsad: all-zero series are skipped with a counter") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 15);
    for (int t = 0; t < 15; ++t) v(0, t) = (t % 3 == 0) ? 2.0 : 1.0;
    PtsadStats stats;
    const auto s = ptsad(make_fm(v), {}, &stats);
    CHECK(stats.skipped_nodes == 2);
    check_scorelist_shape(s, 15);
}

TEST_CASE("ptsad: non-integer input needs the rounding flag") {
    Eigen::MatrixXd v(1, 10);
    v.setConstant(1.5);
    CHECK_THROWS_AS(ptsad(make_fm(v, Feature::weighted_deg)), validation_error);
    CHECK_NOTHROW(ptsad(make_fm(v, Feature::weighted_deg), {.round_to_counts = true}));
}

TEST_CASE("ptsad: scores stay in [0,1] and aggregate over non-skipped nodes") {
    Rng rng(5);
    Eigen::MatrixXd v(4, 40);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index t = 0; t < 40; ++t) {
            v(i, t) = static_cast<double>(poisson_draw(rng, 2.0));
        }
    }
    // the score is one minus the mean p-value, so a tick where every node
    // is unusual dominates a lone extreme node
    for (Eigen::Index i = 0; i < 4; ++i) v(i, 20) = 12.0 + static_cast<double>(i);
    const auto s = ptsad(make_fm(v));
    for (double x : s.scores) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
    }
    std::size_t peak = 0;
    for (std::size_t t = 0; t < 40; ++t) {
        if (s.scores[t] > s.scores[peak]) peak = t;
    }
    CHECK(peak == 20);
}

// --- SPIRIT ----------------------------------------------------------------

TEST_CASE("spirit: perfectly correlated constant streams score zero") {
    Eigen::MatrixXd v(4, 30);
    for (Eigen::Index t = 0; t < 30; ++t) {
        v(0, t) = 2.0;
        v(1, t) = 4.0;
        v(2, t) = 6.0;
        v(3, t) = 2.0;
    }
    const auto s = spirit(make_fm(v));
    check_scorelist_shape(s, 30);
    for (std::size_t t = s.valid_from; t < 30; ++t) {
        CHECK(s.scores[t] == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("spirit: correlation switch raises a spike") {
    Eigen::MatrixXd v(3, 40);
    for (Eigen::Index t = 0; t < 40; ++t) {
        if (t < 20) {
            v(0, t) = 5.0;
            v(1, t) = 5.0;
            v(2, t) = 5.0;
        } else {
            v(0, t) = 9.0;
            v(1, t) = 1.0;
            v(2, t) = 5.0;
        }
    }
    const auto s = spirit(make_fm(v));
    double best = 0.0;
    std::size_t peak = s.valid_from;
    for (std::size_t t = s.valid_from; t < 40; ++t) {
        if (s.scores[t] > best) {
            best = s.scores[t];
            peak = t;
        }
    }
    // the error jump fires at the switch and the hidden-variable change
    // follows within the forgetting window
    CHECK(peak >= 20);
    CHECK(peak <= 23);
    CHECK(best >= 1.0);
    CHECK(s.scores[20] >= 0.9);
    // the switch also forces a hidden-variable change close to t*
    const auto fm = make_fm(v);
    detail::SpiritTracker tracker(3, {});
    bool k_changed_near_switch = false;
    for (std::size_t t = 0; t < 40; ++t) {
        const auto st = tracker.update(fm.values.col(static_cast<Eigen::Index>(t)));
        if (t >= 20 && t <= 25 && st.dk != 0) k_changed_near_switch = true;
    }
    CHECK(k_changed_near_switch);
}

TEST_CASE("spirit: lambda=1 on stationary noise keeps k stable") {
    std::size_t stable_runs = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        Eigen::MatrixXd v(4, 60);
        for (Eigen::Index t = 0; t < 60; ++t) {
            const double base = 10.0;
            for (Eigen::Index i = 0; i < 4; ++i) {
                v(i, t) = std::max(0.0, base + 0.05 * rng.gaussian());
            }
        }
        SpiritParams p;
        p.lambda = 1.0;
        const auto fm = make_fm(v);
        detail::SpiritTracker tracker(4, p);
        bool changed = false;
        const std::size_t warm = spirit_warmup(4);
        for (std::size_t t = 0; t < 60; ++t) {
            const auto st = tracker.update(fm.values.col(static_cast<Eigen::Index>(t)));
            if (t >= warm && st.dk != 0) changed = true;
        }
        if (!changed) ++stable_runs;
    }
    CHECK(stable_runs >= 95);
}

TEST_CASE("spirit: all-zero input scores zero") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(5, 25);
    const auto s = spirit(make_fm(v));
    for (double x : s.scores) CHECK(x == 0.0);
}

TEST_CASE("spirit attribution ranks by participation-weight change") {
    Eigen::MatrixXd v(3, 40);
    for (Eigen::Index t = 0; t < 40; ++t) {
        v(0, t) = 5.0;
        v(1, t) = 5.0;
        v(2, t) = 5.0;
    }
    for (Eigen::Index t = 20; t < 40; ++t) v(0, t) = 15.0;
    const auto a = spirit_attribute(make_fm(v), 20);
    REQUIRE(a.ranked_nodes.size() == 3);
    CHECK(a.ranked_nodes[0] == 0);
    CHECK_THROWS_AS(spirit_attribute(make_fm(v), 2), validation_error);
}

// --- ASED ------------------------------------------------------------------

TEST_CASE("ased: data inside the normal subspace has zero SPE") {
    // columns are combinations of two fixed directions
    Eigen::VectorXd a(4), b(4);
    a << 1, 2, 0, 1;
    b << 0, 1, 3, 2;
    Eigen::MatrixXd v(4, 12);
    for (Eigen::Index t = 0; t < 12; ++t) {
        v.col(t) = (2.0 + std::sin(0.7 * static_cast<double>(t))) * a +
                   (1.0 + std::cos(0.3 * static_cast<double>(t))) * b;
    }
    const auto s = ased(make_fm(v), {.variance_threshold = 0.999});
    for (double x : s.scores) CHECK(x == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("ased: orthogonal perturbation shows up as its squared norm") {
    // rank-1 data s_t * e0 with s = [1,3,2,2]; the perturbed column has
    // s_t equal to the mean, so the covariance eigendirections stay axis
    // aligned and the residuals are analytic: beta = [-1/4,-1/4,3/4,-1/4]
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 4);
    const double s_vals[4] = {1, 3, 2, 2};
    for (Eigen::Index t = 0; t < 4; ++t) v(0, t) = s_vals[t];
    v(1, 2) += 1.0;  // unit perturbation along e1 at t*=2
    const auto s = ased(make_fm(v), {.variance_threshold = 0.7});
    CHECK(s.scores[0] == Catch::Approx(0.0625).margin(1e-9));
    CHECK(s.scores[1] == Catch::Approx(0.0625).margin(1e-9));
    CHECK(s.scores[2] == Catch::Approx(0.5625).margin(1e-9));
    CHECK(s.scores[3] == Catch::Approx(0.0625).margin(1e-9));
}

TEST_CASE("ased: threshold near one retains everything") {
    Rng rng(13);
    Eigen::MatrixXd v(3, 10);
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index t = 0; t < 10; ++t) v(i, t) = rng.uniform(0.0, 4.0);
    }
    const auto s = ased(make_fm(v), {.variance_threshold = 0.999999});
    for (double x : s.scores) CHECK(x == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("ased: needs at least three ticks") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(3, 2);
    CHECK_THROWS_AS(ased(make_fm(v)), validation_error);
}

TEST_CASE("ased attribution points at the perturbed direction") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 4);
    const double s_vals[4] = {1, 3, 2, 2};
    for (Eigen::Index t = 0; t < 4; ++t) v(0, t) = s_vals[t];
    v(1, 2) += 1.0;
    const auto a = ased_attribute(make_fm(v), 2, {.variance_threshold = 0.7});
    CHECK(a.ranked_nodes[0] == 1);
    CHECK(a.responsibility[0] == Catch::Approx(0.5625).margin(1e-9));
}

// --- MAED ------------------------------------------------------------------

TEST_CASE("maed: constant series scores zero") {
    Eigen::MatrixXd v(2, 10);
    v.setConstant(3.0);
    const auto s = maed(make_fm(v));
    for (double x : s.scores) CHECK(x == 0.0);
}

TEST_CASE("maed: textbook spike") {
    Eigen::MatrixXd v(1, 5);
    v << 1, 1, 1, 1, 10;
    const auto s = maed(make_fm(v));
    CHECK(s.scores[4] == Catch::Approx(9.0));
    CHECK(s.scores[0] == 0.0);
    CHECK(s.scores[1] == 0.0);
}

TEST_CASE("maed: simultaneous spikes add up") {
    Eigen::MatrixXd v(2, 5);
    v << 1, 1, 1, 1, 10, 2, 2, 2, 2, 6;
    const auto s = maed(make_fm(v));
    CHECK(s.scores[4] == Catch::Approx(9.0 + 4.0));
}

TEST_CASE("maed: scaling the matrix scales the scores") {
    Rng rng(17);
    Eigen::MatrixXd v(3, 12);
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index t = 0; t < 12; ++t) v(i, t) = rng.uniform(0.0, 3.0);
    }
    const auto a = maed(make_fm(v));
    const auto b = maed(make_fm(Eigen::MatrixXd(4.0 * v)));
    for (std::size_t t = 0; t < 12; ++t) {
        CHECK(b.scores[t] == Catch::Approx(4.0 * a.scores[t]).margin(1e-9));
    }
}

TEST_CASE("maed attribution: the spiking node carries its excess") {
    Eigen::MatrixXd v(3, 5);
    v.setConstant(1.0);
    v(2, 4) = 8.0;
    const auto a = maed_attribute(make_fm(v), 4);
    CHECK(a.ranked_nodes[0] == 2);
    CHECK(a.responsibility[0] == Catch::Approx(7.0));
    CHECK(a.responsibility[1] == 0.0);
    CHECK_THROWS_AS(maed_attribute(make_fm(v), 1), validation_error);
}

// --- shared detector properties ---------------------------------------------

TEST_CASE("detectors are invariant to node permutations") {
    Rng rng(23);
    Eigen::MatrixXd v(5, 36);
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index t = 0; t < 36; ++t) {
            v(i, t) = static_cast<double>(poisson_draw(rng, 2.5));
        }
    }
    v(3, 18) += 9.0;
    std::vector<Eigen::Index> perm = {4, 2, 0, 3, 1};
    Eigen::MatrixXd pv(5, 36);
    for (Eigen::Index i = 0; i < 5; ++i) pv.row(i) = v.row(perm[static_cast<std::size_t>(i)]);

    const auto fm = make_fm(v);
    const auto pfm = make_fm(pv);
    const DetectorParams params;
    for (Detector d : {Detector::ebed, Detector::ptsad, Detector::spirit, Detector::ased,
                       Detector::maed}) {
        const auto s1 = run_detector(d, fm, params);
        const auto s2 = run_detector(d, pfm, params);
        for (std::size_t t = 0; t < 36; ++t) {
            INFO(detector_name(d) << " tick " << t);
            CHECK(s1.scores[t] == Catch::Approx(s2.scores[t]).margin(1e-9));
        }
    }
}

TEST_CASE("detectors are deterministic") {
    Rng rng(29);
    Eigen::MatrixXd v(4, 30);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index t = 0; t < 30; ++t) {
            v(i, t) = static_cast<double>(poisson_draw(rng, 3.0));
        }
    }
    const auto fm = make_fm(v);
    const DetectorParams params;
    for (Detector d : {Detector::ebed, Detector::ptsad, Detector::spirit, Detector::ased,
                       Detector::maed}) {
        const auto s1 = run_detector(d, fm, params);
        const auto s2 = run_detector(d, fm, params);
        CHECK(s1.scores == s2.scores);
    }
}
