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

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "selens/common.hpp"
#include "selens/features.hpp"
#include "selens/types.hpp"

namespace selens {

struct EbedParams {
    std::size_t window = 5;  // sliding window length in ticks
};

namespace detail {

// Principal left singular vector of a nonnegative n x w slice. For a
// nonnegative matrix W, W*W^T is nonnegative, so the vector can be taken
// entrywise nonnegative (Perron-Frobenius); the SVD sign is fixed
// accordingly and tiny negative round-off is clamped. An all-zero slice has
// no principal direction; the uniform unit vector is used so empty graph
// stretches degrade gracefully instead of erroring.
inline Eigen::VectorXd ebed_activity(const Eigen::Ref<const Eigen::MatrixXd>& slice) {
    const auto n = slice.rows();
    if (slice.lpNorm<1>() <= 0.0) {
        return Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(slice, Eigen::ComputeThinU);
    Eigen::VectorXd u = svd.matrixU().col(0);
    if (u.sum() < 0.0) u = -u;
    u = u.cwiseMax(0.0);
    const double norm = u.norm();
    if (norm <= 0.0) {
        return Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    }
    return u / norm;
}

struct EbedTrace {
    std::vector<Eigen::VectorXd> activity;   // u(t) for t in [w-1, T-1]
    std::vector<Eigen::VectorXd> reference;  // r(t), defined from the 2nd window on
    std::size_t first_window = 0;            // tick of the first window end (= w-1)
};

inline EbedTrace ebed_run(const FeatureMatrix& fm, const EbedParams& p) {
    const auto T = fm.ticks();
    const auto n = fm.nodes();
    if (p.window < 2 || p.window > T) {
        throw config_error("EBED window must satisfy 2 <= w <= T (w=" +
                           std::to_string(p.window) + ", T=" + std::to_string(T) + ")");
    }
    if ((fm.values.array() < 0.0).any()) {
        throw validation_error("EBED requires a nonnegative feature matrix");
    }
    EbedTrace tr;
    tr.first_window = p.window - 1;
    Eigen::VectorXd past_sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::size_t past_count = 0;
    for (std::size_t t = p.window - 1; t < T; ++t) {
        const Eigen::Index c0 = static_cast<Eigen::Index>(t - (p.window - 1));
        Eigen::VectorXd u =
            ebed_activity(fm.values.middleCols(c0, static_cast<Eigen::Index>(p.window)));
        if (past_count > 0) {
            Eigen::VectorXd r = past_sum / static_cast<double>(past_count);
            const double norm = r.norm();
            // average of unit nonnegative vectors, norm cannot vanish
            r /= (norm > 0.0 ? norm : 1.0);
            tr.reference.push_back(std::move(r));
        } else {
            tr.reference.emplace_back();  // first window has no past
        }
        past_sum += u;
        ++past_count;
        tr.activity.push_back(std::move(u));
    }
    return tr;
}

} // namespace detail

// Eigen-behavior detector: the activity profile of each sliding window is
// compared against the renormalized average of all prior profiles;
// Z = 1 - u(t).r(t) in [0,1]. The first window has no past, so scoring
// starts at tick w.
inline ScoreList ebed(const FeatureMatrix& fm, const EbedParams& p = {}) {
    auto tr = detail::ebed_run(fm, p);
    ScoreList s;
    s.id = "EBED";
    s.valid_from = p.window;
    s.scores.assign(fm.ticks(), 0.0);
    for (std::size_t i = 1; i < tr.activity.size(); ++i) {
        const double z = 1.0 - tr.activity[i].dot(tr.reference[i]);
        s.scores[tr.first_window + i] = std::clamp(z, 0.0, 1.0);
    }
    return s;
}

// Node responsibility at an anomalous tick: relative change
// |u_i - r_i| / u_i, zero where u_i is zero.
inline Attribution ebed_attribute(const FeatureMatrix& fm, std::size_t tick,
                                  const EbedParams& p = {}) {
    if (tick < p.window || tick >= fm.ticks()) {
        throw validation_error("EBED attribution: tick " + std::to_string(tick) +
                               " is in warm-up or out of range");
    }
    auto tr = detail::ebed_run(fm, p);
    const std::size_t i = tick - tr.first_window;
    const Eigen::VectorXd& u = tr.activity[i];
    const Eigen::VectorXd& r = tr.reference[i];
    std::vector<double> resp(fm.nodes(), 0.0);
    for (std::size_t j = 0; j < fm.nodes(); ++j) {
        const double ui = u(static_cast<Eigen::Index>(j));
        if (ui > 0.0) {
            resp[j] = std::abs(ui - r(static_cast<Eigen::Index>(j))) / ui;
        }
    }
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
    for (std::size_t j : a.ranked_nodes) a.responsibility.push_back(resp[j]);
    return a;
}

} // namespace selens
