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
#include <cmath>
#include <numeric>
#include <vector>

#include "selens/common.hpp"
#include "selens/features.hpp"
#include "selens/types.hpp"

namespace selens {

struct SpiritParams {
    double lambda = 0.96;       // forgetting factor, (0,1]
    double energy_low = 0.95;   // grow k when captured energy falls below this fraction
    double energy_high = 0.98;  // shrink k when captured energy exceeds this fraction
};

namespace detail {

// Incremental tracking of k hidden variables (projections onto adaptively
// updated principal directions). The direction count adapts so the captured
// energy stays within [low, high] of the total, one change per tick; the
// energy accumulators restart after a change so one adaptation does not
// immediately trigger the opposite one. The first direction is seeded from
// the first nonzero observation, which keeps the trajectory equivariant
// under node permutations and makes stable trends settle within warm-up.
class SpiritTracker {
public:
    SpiritTracker(std::size_t n, const SpiritParams& p) : n_(n), p_(p) {
        if (p.lambda <= 0.0 || p.lambda > 1.0) {
            throw config_error("SPIRIT: lambda must lie in (0,1]");
        }
        if (!(0.0 < p.energy_low && p.energy_low < p.energy_high && p.energy_high < 1.0)) {
            throw config_error("SPIRIT: energy bounds must satisfy 0 < low < high < 1");
        }
        W_ = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), 1,
                                       1.0 / std::sqrt(static_cast<double>(n)));
        d_ = Eigen::VectorXd::Constant(1, 1e-4);
    }

    struct Step {
        std::size_t k = 1;
        int dk = 0;
        double err = 0.0;  // squared norm of the deflation residual
    };

    Step update(const Eigen::VectorXd& x) {
        if (!initialized_) {
            const double norm = x.norm();
            if (norm > 0.0) {
                W_.col(0) = x / norm;
                d_(0) = norm * norm;
                initialized_ = true;
            }
        }
        Eigen::VectorXd resid = x;
        double captured = 0.0;
        const auto k = static_cast<Eigen::Index>(W_.cols());
        for (Eigen::Index i = 0; i < k; ++i) {
            const double y = W_.col(i).dot(resid);
            d_(i) = p_.lambda * d_(i) + y * y;
            if (d_(i) > 1e-300) {
                const Eigen::VectorXd e = resid - y * W_.col(i);
                W_.col(i) += (y / d_(i)) * e;
            }
            resid -= y * W_.col(i);
            captured += y * y;
        }
        orthonormalize();

        Step st;
        st.err = resid.squaredNorm();
        energy_total_ = p_.lambda * energy_total_ + x.squaredNorm();
        energy_captured_ = p_.lambda * energy_captured_ + captured;

        if (energy_total_ > 1e-300) {
            if (energy_captured_ < p_.energy_low * energy_total_ &&
                static_cast<std::size_t>(W_.cols()) < n_) {
                if (grow(resid)) {
                    st.dk = 1;
                    energy_total_ = x.squaredNorm();
                    energy_captured_ = captured + st.err;  // new variable owns the residual
                }
            } else if (energy_captured_ > p_.energy_high * energy_total_ && W_.cols() > 1) {
                shrink();
                st.dk = -1;
                energy_total_ = x.squaredNorm();
                energy_captured_ = captured;
            }
        }
        st.k = static_cast<std::size_t>(W_.cols());
        return st;
    }

    const Eigen::MatrixXd& directions() const { return W_; }

private:
    void orthonormalize() {
        for (Eigen::Index i = 0; i < W_.cols(); ++i) {
            for (Eigen::Index j = 0; j < i; ++j) {
                W_.col(i) -= W_.col(j).dot(W_.col(i)) * W_.col(j);
            }
            const double norm = W_.col(i).norm();
            if (norm > 1e-300) W_.col(i) /= norm;
        }
    }

    bool grow(const Eigen::VectorXd& resid) {
        Eigen::VectorXd dir = resid;
        for (Eigen::Index j = 0; j < W_.cols(); ++j) {
            dir -= W_.col(j).dot(dir) * W_.col(j);
        }
        const double norm = dir.norm();
        if (norm < 1e-9) return false;  // nothing left to capture
        W_.conservativeResize(Eigen::NoChange, W_.cols() + 1);
        W_.col(W_.cols() - 1) = dir / norm;
        d_.conservativeResize(d_.size() + 1);
        d_(d_.size() - 1) = std::max(norm * norm, 1e-4);
        return true;
    }

    void shrink() {
        // drop the least energetic hidden variable
        Eigen::Index lo = 0;
        d_.minCoeff(&lo);
        const Eigen::Index k = W_.cols();
        for (Eigen::Index j = lo; j + 1 < k; ++j) {
            W_.col(j) = W_.col(j + 1);
            d_(j) = d_(j + 1);
        }
        W_.conservativeResize(Eigen::NoChange, k - 1);
        d_.conservativeResize(k - 1);
    }

    std::size_t n_;
    SpiritParams p_;
    Eigen::MatrixXd W_;
    Eigen::VectorXd d_;
    bool initialized_ = false;
    double energy_total_ = 0.0;
    double energy_captured_ = 0.0;
};

} // namespace detail

inline std::size_t spirit_warmup(std::size_t n) { return std::max<std::size_t>(5, n / 10); }

// Streaming hidden-variable detector. The per-tick score combines the
// hidden-variable count change with the normalized jump of the
// reconstruction error over the expanding mean of past errors,
// (err - mean) / (err + mean) in [0,1); both terms are zero on stable
// trends and the jump term is invariant to the data scale.
inline ScoreList spirit(const FeatureMatrix& fm, const SpiritParams& p = {}) {
    const auto T = fm.ticks();
    const auto n = fm.nodes();
    detail::SpiritTracker tracker(n, p);
    ScoreList s;
    s.id = "SPIRIT";
    s.valid_from = std::min<std::size_t>(spirit_warmup(n), T);
    s.scores.assign(T, 0.0);
    double err_sum = 0.0;
    double energy_sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        const Eigen::VectorXd x = fm.values.col(static_cast<Eigen::Index>(t));
        const auto st = tracker.update(x);
        double score = std::abs(static_cast<double>(st.dk));
        if (t > 0) {
            const double mean_err = err_sum / static_cast<double>(t);
            // ignore residuals at round-off level relative to the data scale
            const double floor = 1e-9 * (energy_sum / static_cast<double>(t));
            if (st.err > mean_err && st.err > floor) {
                score += (st.err - mean_err) / (st.err + mean_err);
            }
        }
        err_sum += st.err;
        energy_sum += x.squaredNorm();
        if (t >= s.valid_from) s.scores[t] = score;
    }
    return s;
}

// Node responsibility at a tick: total absolute change of the node's
// participation weights across hidden variables between tick-1 and tick.
inline Attribution spirit_attribute(const FeatureMatrix& fm, std::size_t tick,
                                    const SpiritParams& p = {}) {
    const auto T = fm.ticks();
    const auto n = fm.nodes();
    if (tick < std::min<std::size_t>(spirit_warmup(n), T) || tick >= T) {
        throw validation_error("SPIRIT attribution: tick " + std::to_string(tick) +
                               " is in warm-up or out of range");
    }
    detail::SpiritTracker tracker(n, p);
    Eigen::MatrixXd before;
    for (std::size_t t = 0; t <= tick; ++t) {
        if (t == tick) before = tracker.directions();
        tracker.update(fm.values.col(static_cast<Eigen::Index>(t)));
    }
    const Eigen::MatrixXd& after = tracker.directions();
    std::vector<double> resp(n, 0.0);
    const Eigen::Index kmax = std::max(before.cols(), after.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < kmax; ++j) {
            const double b = j < before.cols() ? before(row, j) : 0.0;
            const double a = j < after.cols() ? after(row, j) : 0.0;
            acc += std::abs(a - b);
        }
        resp[i] = acc;
    }
    Attribution a;
    a.tick = tick;
    a.ranked_nodes.resize(n);
    std::iota(a.ranked_nodes.begin(), a.ranked_nodes.end(), std::size_t{0});
    std::stable_sort(a.ranked_nodes.begin(), a.ranked_nodes.end(),
                     [&](std::size_t x, std::size_t y) {
                         if (resp[x] != resp[y]) return resp[x] > resp[y];
                         return x < y;
                     });
    a.responsibility.reserve(n);
    for (std::size_t i : a.ranked_nodes) a.responsibility.push_back(resp[i]);
    return a;
}

} // namespace selens
