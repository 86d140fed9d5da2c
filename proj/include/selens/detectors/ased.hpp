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
#include <algorithm>
#include <numeric>
#include <vector>

#include "selens/common.hpp"
#include "selens/features.hpp"
#include "selens/types.hpp"

namespace selens {

struct AsedParams {
    double variance_threshold = 0.9;  // fraction of variance kept in the normal subspace
};

namespace detail {

struct AsedModel {
    Eigen::VectorXd mean;       // mean column
    Eigen::MatrixXd normal;     // n x k top principal directions
    bool degenerate = false;    // zero total variance
};

inline AsedModel ased_fit(const FeatureMatrix& fm, const AsedParams& p) {
    if (p.variance_threshold <= 0.0 || p.variance_threshold >= 1.0) {
        throw config_error("ASED: variance threshold must lie in (0,1)");
    }
    if (fm.ticks() < 3) {
        throw validation_error("ASED needs at least 3 ticks, got " +
                               std::to_string(fm.ticks()));
    }
    AsedModel m;
    m.mean = fm.values.rowwise().mean();
    Eigen::MatrixXd centered = fm.values.colwise() - m.mean;
    const double T = static_cast<double>(fm.ticks());
    Eigen::MatrixXd cov = centered * centered.transpose() / T;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd evals = eig.eigenvalues();  // ascending
    const double total = std::max(0.0, evals.sum());
    if (total <= 1e-300) {
        m.degenerate = true;
        return m;
    }
    // smallest k top components with cumulative variance >= threshold
    const auto n = evals.size();
    double acc = 0.0;
    Eigen::Index k = 0;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        acc += std::max(0.0, evals(i));
        ++k;
        if (acc >= p.variance_threshold * total) break;
    }
    m.normal.resize(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        m.normal.col(j) = eig.eigenvectors().col(n - 1 - j);
    }
    return m;
}

inline Eigen::VectorXd ased_residual(const AsedModel& m, const Eigen::VectorXd& x) {
    Eigen::VectorXd c = x - m.mean;
    if (m.degenerate) return Eigen::VectorXd::Zero(c.size());
    return c - m.normal * (m.normal.transpose() * c);
}

} // namespace detail

// Subspace detector: the top principal components of the mean-centered
// columns form the normal subspace; the score of tick t is the squared
// prediction error of its column in the anomalous (residual) subspace.
inline ScoreList ased(const FeatureMatrix& fm, const AsedParams& p = {}) {
    auto model = detail::ased_fit(fm, p);
    ScoreList s;
    s.id = "ASED";
    s.valid_from = 0;
    s.scores.assign(fm.ticks(), 0.0);
    if (model.degenerate) return s;
    for (std::size_t t = 0; t < fm.ticks(); ++t) {
        const Eigen::VectorXd r =
            detail::ased_residual(model, fm.values.col(static_cast<Eigen::Index>(t)));
        s.scores[t] = r.squaredNorm();
    }
    return s;
}

inline Attribution ased_attribute(const FeatureMatrix& fm, std::size_t tick,
                                  const AsedParams& p = {}) {
    if (tick >= fm.ticks()) {
        throw validation_error("ASED attribution: tick out of range");
    }
    auto model = detail::ased_fit(fm, p);
    Eigen::VectorXd r = model.degenerate
                            ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fm.nodes()))
                            : detail::ased_residual(model,
                                                    fm.values.col(static_cast<Eigen::Index>(tick)));
    std::vector<double> resp(fm.nodes());
    for (std::size_t i = 0; i < fm.nodes(); ++i) {
        const double v = r(static_cast<Eigen::Index>(i));
        resp[i] = v * v;
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
    for (std::size_t i : a.ranked_nodes) a.responsibility.push_back(resp[i]);
    return a;
}

} // namespace selens
