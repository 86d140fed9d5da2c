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
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "selens/common.hpp"

namespace selens {

// P(l-th order statistic of m iid U[0,1] samples <= r), i.e. the probability
// that at least l of m uniform draws land in [0, r]:
//
//   sum_{t=l}^{m} C(m,t) r^t (1-r)^(m-t)
//
// Exact summation with double binomial coefficients up to m = 30, log-domain
// terms above that.
inline double binomial_rank_tail(std::size_t l, std::size_t m, double r) {
    if (l < 1 || l > m) {
        throw validation_error("binomial_rank_tail: l=" + std::to_string(l) +
                               " out of range 1.." + std::to_string(m));
    }
    if (r < 0.0 || r > 1.0) {
        throw validation_error("binomial_rank_tail: r out of [0,1]");
    }
    if (r == 0.0) return 0.0;
    if (r == 1.0) return 1.0;
    if (m <= 30) {
        // C(m,t) built incrementally; exact in double for m <= 30
        double c = 1.0;
        for (std::size_t t = 1; t <= l; ++t) {
            c = c * static_cast<double>(m - t + 1) / static_cast<double>(t);
        }
        double sum = 0.0;
        for (std::size_t t = l; t <= m; ++t) {
            sum += c * std::pow(r, static_cast<double>(t)) *
                   std::pow(1.0 - r, static_cast<double>(m - t));
            c = c * static_cast<double>(m - t) / static_cast<double>(t + 1);
        }
        return std::min(1.0, std::max(0.0, sum));
    }
    // log-domain accumulation for large m
    const double lr = std::log(r);
    const double l1r = std::log1p(-r);
    double maxlog = -std::numeric_limits<double>::infinity();
    std::vector<double> logs;
    logs.reserve(m - l + 1);
    for (std::size_t t = l; t <= m; ++t) {
        const double lc = std::lgamma(static_cast<double>(m) + 1.0) -
                          std::lgamma(static_cast<double>(t) + 1.0) -
                          std::lgamma(static_cast<double>(m - t) + 1.0);
        const double lt = lc + static_cast<double>(t) * lr + static_cast<double>(m - t) * l1r;
        logs.push_back(lt);
        maxlog = std::max(maxlog, lt);
    }
    double acc = 0.0;
    for (double lt : logs) acc += std::exp(lt - maxlog);
    return std::min(1.0, std::exp(maxlog) * acc);
}

// Same probability evaluated on a sorted normalized-rank vector: picks
// r = r_sorted[l-1]. r_sorted must be non-decreasing with values in [0,1].
inline double binomial_order_prob(const std::vector<double>& r_sorted,
                                  std::size_t l, std::size_t m) {
    if (m != r_sorted.size()) {
        throw validation_error("binomial_order_prob: m does not match vector size");
    }
    if (l < 1 || l > m) {
        throw validation_error("binomial_order_prob: l=" + std::to_string(l) +
                               " out of range 1.." + std::to_string(m));
    }
    for (std::size_t i = 0; i + 1 < r_sorted.size(); ++i) {
        if (r_sorted[i] > r_sorted[i + 1]) {
            throw validation_error("binomial_order_prob: ranks not sorted");
        }
    }
    return binomial_rank_tail(l, m, r_sorted[l - 1]);
}

} // namespace selens
