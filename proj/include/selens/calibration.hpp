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
#include <numeric>
#include <vector>

#include "selens/common.hpp"
#include "selens/types.hpp"

namespace selens {

// Unification: regularize scores against a baseline (the sample mean of the
// valid ticks), then map through a Gaussian-style scaling
// prob = max(0, erf((s' - mu') / (sigma' * sqrt(2)))) with mu'/sigma' the
// mean and population std of the regularized scores. Constant input yields
// all-zero probabilities. Warm-up ticks are excluded from fitting and get
// probability 0.
inline ProbList unify(const ScoreList& s) {
    ProbList out;
    out.source_id = s.id;
    out.valid_from = s.valid_from;
    out.probs.assign(s.size(), 0.0);
    const std::size_t T = s.size();
    if (s.valid_from >= T) return out;
    const std::size_t nvalid = T - s.valid_from;

    double baseline = 0.0;
    for (std::size_t t = s.valid_from; t < T; ++t) baseline += s.scores[t];
    baseline /= static_cast<double>(nvalid);

    std::vector<double> reg(nvalid);
    double mu = 0.0;
    for (std::size_t t = s.valid_from; t < T; ++t) {
        reg[t - s.valid_from] = std::max(0.0, s.scores[t] - baseline);
        mu += reg[t - s.valid_from];
    }
    mu /= static_cast<double>(nvalid);
    double var = 0.0;
    for (double v : reg) var += (v - mu) * (v - mu);
    var /= static_cast<double>(nvalid);
    const double sigma = std::sqrt(var);
    if (sigma <= 0.0) return out;  // constant (degenerate) input

    const double denom = sigma * std::sqrt(2.0);
    for (std::size_t t = s.valid_from; t < T; ++t) {
        out.probs[t] = std::max(0.0, std::erf((reg[t - s.valid_from] - mu) / denom));
    }
    return out;
}

// Exponential (inlier) + Gaussian (outlier) mixture fitted by EM. The
// posterior of the Gaussian component is the calibrated probability; ticks
// with posterior > 0.5 are labeled outliers. Scores are shifted so the
// minimum valid score sits at zero before fitting, which also makes the
// labels invariant to constant score shifts.
inline ProbList mixture_model(const ScoreList& s) {
    ProbList out;
    out.source_id = s.id;
    out.valid_from = s.valid_from;
    out.has_labels = true;
    const std::size_t T = s.size();
    out.probs.assign(T, 0.0);
    out.labels.assign(T, 0);
    if (s.valid_from >= T || T - s.valid_from < 10) {
        throw validation_error("mixture_model needs at least 10 valid ticks, got " +
                               std::to_string(T > s.valid_from ? T - s.valid_from : 0));
    }
    const std::size_t n = T - s.valid_from;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = s.scores[s.valid_from + i];
    const double shift = *std::min_element(v.begin(), v.end());
    for (double& x : v) x -= shift;
    const double vmax = *std::max_element(v.begin(), v.end());
    if (vmax <= 0.0) return out;  // constant scores: no separation

    // deterministic init: inlier rate from the lower 90%, outlier
    // mean/std from the top 10%, mixing weight 0.9/0.1
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t cut = std::max<std::size_t>(1, n - std::max<std::size_t>(1, n / 10));
    double lo_mean = 0.0;
    for (std::size_t i = 0; i < cut; ++i) lo_mean += sorted[i];
    lo_mean /= static_cast<double>(cut);
    double hi_mean = 0.0, hi_var = 0.0;
    const std::size_t hi_n = n - cut;
    for (std::size_t i = cut; i < n; ++i) hi_mean += sorted[i];
    hi_mean /= static_cast<double>(hi_n);
    for (std::size_t i = cut; i < n; ++i) hi_var += (sorted[i] - hi_mean) * (sorted[i] - hi_mean);
    hi_var /= static_cast<double>(hi_n);

    // Zero-heavy lists make the exponential likelihood unbounded (rate ->
    // inf soaks the zeros and everything else turns "outlier"), so the
    // inlier mean is floored to a fraction of the overall mean and the
    // rate stays anchored to the bulk scale.
    double vbar = 0.0;
    for (double x : v) vbar += x;
    vbar /= static_cast<double>(n);
    const double mean_floor = std::max(0.05 * vbar, 1e-12 * vmax);
    const double sigma_floor = std::max(1e-6 * vmax, 1e-12);
    double rate = 1.0 / std::max(lo_mean, mean_floor);
    double mu = hi_mean;
    double sigma = std::max(std::sqrt(hi_var), sigma_floor);
    double w_out = 0.1;

    std::vector<double> gamma(n, 0.0);
    double prev_ll = -std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double le = std::log(rate) - rate * v[i] + std::log1p(-w_out);
            const double lg = -0.5 * std::log(2.0 * M_PI * sigma * sigma) -
                              (v[i] - mu) * (v[i] - mu) / (2.0 * sigma * sigma) +
                              std::log(w_out);
            const double m = std::max(le, lg);
            const double z = std::exp(le - m) + std::exp(lg - m);
            ll += m + std::log(z);
            gamma[i] = std::exp(lg - m) / z;
        }
        double gsum = 0.0, gx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            gsum += gamma[i];
            gx += gamma[i] * v[i];
        }
        const double isum = static_cast<double>(n) - gsum;
        w_out = std::clamp(gsum / static_cast<double>(n), 1e-9, 1.0 - 1e-9);
        mu = gsum > 1e-12 ? gx / gsum : mu;
        double gvar = 0.0;
        for (std::size_t i = 0; i < n; ++i) gvar += gamma[i] * (v[i] - mu) * (v[i] - mu);
        sigma = gsum > 1e-12 ? std::max(std::sqrt(gvar / gsum), sigma_floor) : sigma;
        double ix = 0.0;
        for (std::size_t i = 0; i < n; ++i) ix += (1.0 - gamma[i]) * v[i];
        if (isum > 1e-12) {
            rate = 1.0 / std::max(ix / isum, mean_floor);
        }
        if (std::abs(ll - prev_ll) < 1e-8) {
            converged = true;
            break;
        }
        prev_ll = ll;
    }
    out.converged = converged;

    // The fitted posterior can dip for extreme scores where both densities
    // vanish; force it non-decreasing in the score so larger scores never
    // get smaller probabilities.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    double running = 0.0;
    for (std::size_t i : idx) {
        running = std::max(running, gamma[i]);
        gamma[i] = running;
    }

    for (std::size_t i = 0; i < n; ++i) {
        out.probs[s.valid_from + i] = gamma[i];
        out.labels[s.valid_from + i] = gamma[i] > 0.5 ? 1 : 0;
    }
    return out;
}

} // namespace selens
