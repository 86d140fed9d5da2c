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
#include <ostream>
#include <string>
#include <vector>

#include "selens/common.hpp"
#include "selens/graph.hpp"

namespace selens {

enum class Feature {
    weighted_in,
    weighted_out,
    unweighted_in,
    unweighted_out,
    weighted_deg,
    unweighted_deg,
};

// Short tags, used in component ids ("EBED(win)") and file names.
inline const char* feature_name(Feature f) {
    switch (f) {
        case Feature::weighted_in: return "win";
        case Feature::weighted_out: return "wout";
        case Feature::unweighted_in: return "uin";
        case Feature::unweighted_out: return "uout";
        case Feature::weighted_deg: return "wdeg";
        case Feature::unweighted_deg: return "udeg";
    }
    return "?";
}

inline Feature parse_feature(const std::string& s) {
    if (s == "win") return Feature::weighted_in;
    if (s == "wout") return Feature::weighted_out;
    if (s == "uin") return Feature::unweighted_in;
    if (s == "uout") return Feature::unweighted_out;
    if (s == "wdeg") return Feature::weighted_deg;
    if (s == "udeg") return Feature::unweighted_deg;
    throw config_error("unknown feature '" + s + "' (expected win|wout|uin|uout|wdeg|udeg)");
}

inline bool feature_is_weighted(Feature f) {
    return f == Feature::weighted_in || f == Feature::weighted_out ||
           f == Feature::weighted_deg;
}

inline bool feature_is_directional(Feature f) {
    return f == Feature::weighted_in || f == Feature::weighted_out ||
           f == Feature::unweighted_in || f == Feature::unweighted_out;
}

// n x T node-by-tick series of one degree feature. Unweighted variants are
// integer-valued; all entries are finite and >= 0.
struct FeatureMatrix {
    std::vector<std::string> node_ids;
    Feature feature = Feature::weighted_deg;
    Eigen::MatrixXd values;  // n x T

    std::size_t nodes() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t ticks() const { return static_cast<std::size_t>(values.cols()); }
};

// Entry (i, t) = sum of incident edge weights (weighted) or incident edge
// count (unweighted) of node i in snapshot t, respecting direction. Nodes
// absent from a snapshot get 0. A self-loop contributes once to in and once
// to out (hence twice to the total degree).
inline FeatureMatrix extract_features(const TemporalGraphSequence& g, Feature f) {
    if (feature_is_directional(f) && !g.directed) {
        throw config_error(std::string("feature '") + feature_name(f) +
                           "' requires a directed graph sequence");
    }
    FeatureMatrix fm;
    fm.node_ids = g.node_ids;
    fm.feature = f;
    fm.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.nodes()),
                                      static_cast<Eigen::Index>(g.ticks()));
    const bool weighted = feature_is_weighted(f);
    for (std::size_t t = 0; t < g.ticks(); ++t) {
        const auto col = static_cast<Eigen::Index>(t);
        for (const Edge& e : g.snapshots[t]) {
            const double w = weighted ? e.weight : 1.0;
            switch (f) {
                case Feature::weighted_in:
                case Feature::unweighted_in:
                    fm.values(e.dst, col) += w;
                    break;
                case Feature::weighted_out:
                case Feature::unweighted_out:
                    fm.values(e.src, col) += w;
                    break;
                case Feature::weighted_deg:
                case Feature::unweighted_deg:
                    fm.values(e.src, col) += w;
                    fm.values(e.dst, col) += w;
                    break;
            }
        }
    }
    return fm;
}

// CSV export: node-id row labels, tick column labels.
inline void write_feature_csv(std::ostream& out, const FeatureMatrix& fm,
                              const std::vector<long long>& timestamps) {
    out << "node";
    for (std::size_t t = 0; t < fm.ticks(); ++t) {
        out << ',' << (t < timestamps.size() ? timestamps[t] : static_cast<long long>(t));
    }
    out << '\n';
    for (std::size_t i = 0; i < fm.nodes(); ++i) {
        out << fm.node_ids[i];
        for (std::size_t t = 0; t < fm.ticks(); ++t) {
            out << ',' << fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
        }
        out << '\n';
    }
}

} // namespace selens
