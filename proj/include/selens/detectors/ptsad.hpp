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
#include <numeric>
#include <string>
#include <vector>

#include "selens/common.hpp"
#include "selens/features.hpp"
#include "selens/types.hpp"

namespace selens {

struct PtsadParams {
    // Count models need integer data. Off by default: non-integer features
    // are rejected rather than silently rounded.
    bool round_to_counts = false;
};

struct PtsadStats {
    std::size_t skipped_nodes = 0;  // all-zero series, excluded from aggregation
};

namespace detail {

inline double poisson_logpmf(long long k, double lambda) {
    if (lambda <= 0.0) return k == 0 ? 0.0 : -745.0;
    return static_cast<double>(k) * std::log(lambda) - lambda -
           std::lgamma(static_cast<double>(k) + 1.0);
}

// P(X >= x) for X ~ Poisson(lambda), summed upward from x so small tail
// probabilities keep full precision.
inline double poisson_tail(long long x, double lambda) {
    if (x <= 0) return 1.0;
    if (lambda <= 0.0) return 0.0;
    double term = std::exp(poisson_logpmf(x, lambda));
    double sum = term;
    long long k = x;
    // terms decay once k > lambda; stop when negligible
    while (true) {
        ++k;
        term *= lambda / static_cast<double>(k);
        sum += term;
        if (k > x + 8 && (term < sum * 1e-17 || term < 1e-320)) break;
        if (k > x + static_cast<long long>(10.0 * lambda) + 200) break;
    }
    return std::min(1.0, sum);
}

// Zero-truncated Poisson helpers (support k >= 1).
inline double ztp_logpmf(long long k, double lambda) {
    const double denom = -std::log1p(-std::exp(-lambda));
    return poisson_logpmf(k, lambda) + denom;
}

inline double ztp_tail(long long x, double lambda) {
    if (x <= 1) return 1.0;
    const double denom = 1.0 - std::exp(-lambda);
    if (denom <= 0.0) return 0.0;
    return std::min(1.0, poisson_tail(x, lambda) / denom);
}

// MLE of the ZTP rate: solve lambda / (1 - e^-lambda) = mean of positives.
inline double ztp_mle(double positive_mean) {
    if (positive_mean <= 1.0 + 1e-12) return 1e-8;
    double lambda = positive_mean;
    for (int it = 0; it < 100; ++it) {
        const double em = std::exp(-lambda);
        const double denom = 1.0 - em;
        const double f = lambda / denom - positive_mean;
        const double fp = (denom - lambda * em) / (denom * denom);
        const double step = f / fp;
        lambda -= step;
        if (lambda < 1e-10) lambda = 1e-10;
        if (std::abs(step) < 1e-12) break;
    }
    return lambda;
}

enum class CountModel { poisson, zip, bern_ztp, markov_ztp };

inline const char* count_model_name(CountModel m) {
    switch (m) {
        case CountModel::poisson: return "poisson";
        case CountModel::zip: return "zip";
        case CountModel::bern_ztp: return "bern+ztp";
        case CountModel::markov_ztp: return "markov+ztp";
    }
    return "?";
}

struct PtsadFit {
    CountModel kind = CountModel::poisson;
    int n_params = 1;
    double lambda = 0.0;    // Poisson / ZIP / ZTP rate
    double pi = 0.0;        // ZIP zero-inflation mass
    double p_active = 0.0;  // hurdle activity probability (also Markov marginal)
    double p01 = 0.0;       // Markov P(active | previously inactive)
    double p11 = 0.0;       // Markov P(active | previously active)
};

inline PtsadFit fit_poisson(const std::vector<long long>& xs) {
    PtsadFit f;
    f.kind = CountModel::poisson;
    f.n_params = 1;
    f.lambda = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    return f;
}

// ZIP via EM (<= 200 iterations, tol 1e-8 on the log-likelihood).
inline PtsadFit fit_zip(const std::vector<long long>& xs) {
    PtsadFit f;
    f.kind = CountModel::zip;
    f.n_params = 2;
    const double N = static_cast<double>(xs.size());
    double total = 0.0;
    double zeros = 0.0;
    for (long long x : xs) {
        total += static_cast<double>(x);
        if (x == 0) zeros += 1.0;
    }
    if (zeros == 0.0) {
        f.pi = 0.0;
        f.lambda = total / N;
        return f;
    }
    double pi = std::clamp(0.5 * zeros / N, 1e-6, 1.0 - 1e-6);
    double lambda = std::max(total / std::max(N - zeros, 1.0), 1e-6);
    auto loglik = [&](double p, double l) {
        double ll = 0.0;
        for (long long x : xs) {
            if (x == 0) {
                ll += std::log(std::max(p + (1.0 - p) * std::exp(-l), 1e-300));
            } else {
                ll += std::log1p(-p) + poisson_logpmf(x, l);
            }
        }
        return ll;
    };
    double prev = loglik(pi, lambda);
    for (int it = 0; it < 200; ++it) {
        // E: posterior that a zero came from the inflation component
        const double w0 = pi / (pi + (1.0 - pi) * std::exp(-lambda));
        const double wsum = w0 * zeros;
        // M
        pi = std::clamp(wsum / N, 1e-9, 1.0 - 1e-9);
        lambda = std::max(total / std::max(N - wsum, 1e-9), 1e-10);
        const double cur = loglik(pi, lambda);
        if (std::abs(cur - prev) < 1e-8) break;
        prev = cur;
    }
    f.pi = pi;
    f.lambda = lambda;
    return f;
}

inline PtsadFit fit_bern_ztp(const std::vector<long long>& xs) {
    PtsadFit f;
    f.kind = CountModel::bern_ztp;
    f.n_params = 2;
    double nnz = 0.0, possum = 0.0;
    for (long long x : xs) {
        if (x > 0) {
            nnz += 1.0;
            possum += static_cast<double>(x);
        }
    }
    f.p_active = nnz / static_cast<double>(xs.size());
    f.lambda = nnz > 0.0 ? ztp_mle(possum / nnz) : 1e-8;
    return f;
}

inline PtsadFit fit_markov_ztp(const std::vector<long long>& xs) {
    PtsadFit f;
    f.kind = CountModel::markov_ztp;
    f.n_params = 3;
    double nnz = 0.0, possum = 0.0;
    for (long long x : xs) {
        if (x > 0) {
            nnz += 1.0;
            possum += static_cast<double>(x);
        }
    }
    f.p_active = nnz / static_cast<double>(xs.size());
    f.lambda = nnz > 0.0 ? ztp_mle(possum / nnz) : 1e-8;
    double c00 = 0, c01 = 0, c10 = 0, c11 = 0;
    for (std::size_t t = 1; t < xs.size(); ++t) {
        const bool prev = xs[t - 1] > 0;
        const bool cur = xs[t] > 0;
        if (!prev && !cur) c00 += 1;
        if (!prev && cur) c01 += 1;
        if (prev && !cur) c10 += 1;
        if (prev && cur) c11 += 1;
    }
    f.p01 = (c00 + c01) > 0 ? c01 / (c00 + c01) : f.p_active;
    f.p11 = (c10 + c11) > 0 ? c11 / (c10 + c11) : f.p_active;
    return f;
}

inline double clamped_log(double p) { return std::log(std::clamp(p, 1e-300, 1.0)); }

// Activity probability of tick t under a hurdle fit.
inline double hurdle_activity(const PtsadFit& f, const std::vector<long long>& xs,
                              std::size_t t) {
    if (f.kind == CountModel::bern_ztp) return f.p_active;
    if (t == 0) return f.p_active;
    return xs[t - 1] > 0 ? f.p11 : f.p01;
}

inline std::vector<double> pointwise_loglik(const PtsadFit& f,
                                            const std::vector<long long>& xs) {
    std::vector<double> ll(xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const long long x = xs[t];
        switch (f.kind) {
            case CountModel::poisson:
                ll[t] = poisson_logpmf(x, f.lambda);
                break;
            case CountModel::zip:
                ll[t] = x == 0 ? clamped_log(f.pi + (1.0 - f.pi) * std::exp(-f.lambda))
                               : clamped_log(1.0 - f.pi) + poisson_logpmf(x, f.lambda);
                break;
            case CountModel::bern_ztp:
            case CountModel::markov_ztp: {
                const double q = hurdle_activity(f, xs, t);
                ll[t] = x == 0 ? clamped_log(1.0 - q)
                               : clamped_log(q) + ztp_logpmf(x, f.lambda);
                break;
            }
        }
    }
    return ll;
}

// Single-sided p-value P(X >= x) at tick t; equals 1 - cdf(x) + pdf(x).
inline double ptsad_pvalue(const PtsadFit& f, const std::vector<long long>& xs,
                           std::size_t t) {
    const long long x = xs[t];
    if (x <= 0) return 1.0;
    switch (f.kind) {
        case CountModel::poisson:
            return poisson_tail(x, f.lambda);
        case CountModel::zip:
            return (1.0 - f.pi) * poisson_tail(x, f.lambda);
        case CountModel::bern_ztp:
        case CountModel::markov_ztp:
            return std::clamp(hurdle_activity(f, xs, t) * ztp_tail(x, f.lambda), 0.0, 1.0);
    }
    return 1.0;
}

// Vuong likelihood-ratio test for non-nested models, 5% two-sided. Returns
// true when the incumbent (first) model is kept. Ties (including degenerate
// zero-variance differences) go to the model with fewer parameters, and to
// the incumbent when tied on that as well.
inline bool vuong_keeps_first(const std::vector<double>& ll_a, const std::vector<double>& ll_b,
                              int params_a, int params_b) {
    const std::size_t N = ll_a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < N; ++i) mean += ll_a[i] - ll_b[i];
    mean /= static_cast<double>(N);
    double var = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double d = (ll_a[i] - ll_b[i]) - mean;
        var += d * d;
    }
    var /= static_cast<double>(N);
    const double sd = std::sqrt(var);
    if (sd < 1e-12) return params_a <= params_b;
    const double z = std::sqrt(static_cast<double>(N)) * mean / sd;
    constexpr double kCrit = 1.959964;  // 5% two-sided normal quantile
    if (z > kCrit) return true;
    if (z < -kCrit) return false;
    return params_a <= params_b;
}

// Fits all four models and runs the tournament:
// Poisson vs ZIP, winner vs Bernoulli+ZTP, winner vs Markov+ZTP.
inline PtsadFit ptsad_select_model(const std::vector<long long>& xs) {
    PtsadFit best = fit_poisson(xs);
    std::vector<double> ll_best = pointwise_loglik(best, xs);
    const PtsadFit challengers[3] = {fit_zip(xs), fit_bern_ztp(xs), fit_markov_ztp(xs)};
    for (const PtsadFit& ch : challengers) {
        std::vector<double> ll_ch = pointwise_loglik(ch, xs);
        if (!vuong_keeps_first(ll_best, ll_ch, best.n_params, ch.n_params)) {
            best = ch;
            ll_best = std::move(ll_ch);
        }
    }
    return best;
}

inline std::vector<long long> ptsad_series(const FeatureMatrix& fm, std::size_t node,
                                           bool round_to_counts) {
    std::vector<long long> xs(fm.ticks());
    for (std::size_t t = 0; t < fm.ticks(); ++t) {
        const double v = fm.values(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(t));
        const double r = std::round(v);
        if (!round_to_counts && std::abs(v - r) > 1e-9) {
            throw validation_error("PTSAD requires integer counts; node " +
                                   fm.node_ids[node] + " has value " + std::to_string(v) +
                                   " at tick " + std::to_string(t) +
                                   " (enable rounding to use weighted features)");
        }
        xs[t] = static_cast<long long>(r);
    }
    return xs;
}

} // namespace detail

// Probabilistic series detector: each node series gets its best-fitting
// count model (Vuong tournament over Poisson, ZIP and two hurdle models),
// each tick a single-sided p-value under that model, and the tick score is
// one minus the mean p-value over non-skipped nodes. All-zero series are
// skipped and counted in stats.
inline ScoreList ptsad(const FeatureMatrix& fm, const PtsadParams& p = {},
                       PtsadStats* stats = nullptr) {
    const auto n = fm.nodes();
    const auto T = fm.ticks();
    ScoreList s;
    s.id = "PTSAD";
    s.valid_from = 0;
    s.scores.assign(T, 0.0);
    std::vector<double> psum(T, 0.0);
    std::size_t used = 0, skipped = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto xs = detail::ptsad_series(fm, i, p.round_to_counts);
        if (std::all_of(xs.begin(), xs.end(), [](long long v) { return v == 0; })) {
            ++skipped;
            continue;
        }
        const auto fit = detail::ptsad_select_model(xs);
        for (std::size_t t = 0; t < T; ++t) {
            psum[t] += detail::ptsad_pvalue(fit, xs, t);
        }
        ++used;
    }
    if (stats) stats->skipped_nodes = skipped;
    if (used == 0) return s;
    for (std::size_t t = 0; t < T; ++t) {
        s.scores[t] = std::clamp(1.0 - psum[t] / static_cast<double>(used), 0.0, 1.0);
    }
    return s;
}

// Node responsibility at a tick: 1 - p-value (ascending p-value order).
// Skipped (all-zero) nodes rank last with responsibility 0.
inline Attribution ptsad_attribute(const FeatureMatrix& fm, std::size_t tick,
                                   const PtsadParams& p = {}) {
    if (tick >= fm.ticks()) {
        throw validation_error("PTSAD attribution: tick out of range");
    }
    const auto n = fm.nodes();
    std::vector<double> resp(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto xs = detail::ptsad_series(fm, i, p.round_to_counts);
        if (std::all_of(xs.begin(), xs.end(), [](long long v) { return v == 0; })) continue;
        const auto fit = detail::ptsad_select_model(xs);
        resp[i] = 1.0 - detail::ptsad_pvalue(fit, xs, tick);
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
