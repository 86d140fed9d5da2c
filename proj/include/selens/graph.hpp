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
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "selens/common.hpp"

namespace selens {

struct Edge {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    double weight = 1.0;
};

// Ordered sequence of graph snapshots over a regular tick axis. Node ids are
// interned into dense indices in first-seen order; `node_ids` maps back.
// Undirected sequences store each edge once with src <= dst. Empty snapshots
// are legal and kept so the time axis stays regular.
struct TemporalGraphSequence {
    std::vector<long long> timestamps;            // original bucket labels, strictly increasing
    std::vector<std::vector<Edge>> snapshots;     // one edge multiset per tick
    bool directed = true;
    std::vector<std::string> node_ids;

    std::size_t ticks() const { return snapshots.size(); }
    std::size_t nodes() const { return node_ids.size(); }
};

// Maps raw times to consecutive ticks: fixed-width bucketing from `origin`
// (default: the minimum time seen), with an optional periodic skip predicate
// that drops whole buckets, e.g. weekends in a daily stream
// (skip_period = 7, skip_residues = {5, 6}).
struct TickSpec {
    double bucket_width = 1.0;
    std::optional<double> origin;
    int skip_period = 0;                 // 0 = no skipping
    std::vector<int> skip_residues;

    bool skips(long long bucket) const {
        if (skip_period <= 0) return false;
        long long r = bucket % skip_period;
        if (r < 0) r += skip_period;
        for (int res : skip_residues) {
            if (r == res) return true;
        }
        return false;
    }
};

namespace detail {

struct RawEdgeRow {
    double time;
    std::string src;
    std::string dst;
    double weight;
};

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        std::size_t b = f.find_first_not_of(" \t\r");
        std::size_t e = f.find_last_not_of(" \t\r");
        f = (b == std::string::npos) ? std::string{} : f.substr(b, e - b + 1);
    }
    return fields;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size();
}

} // namespace detail

// Reads `time,src,dst[,weight]` rows. `#` lines and blank lines are ignored;
// a single non-numeric leading row is accepted as a header. Missing weight
// defaults to 1.0.
inline TemporalGraphSequence load_edge_stream(std::istream& in, bool directed,
                                              const TickSpec& spec = {}) {
    if (spec.bucket_width <= 0.0) {
        throw validation_error("tick spec: bucket width must be positive");
    }
    std::vector<detail::RawEdgeRow> rows;
    std::string line;
    std::size_t lineno = 0;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        if (line[b] == '#') continue;
        auto fields = detail::split_csv_row(line);
        if (fields.size() != 3 && fields.size() != 4) {
            throw parse_error("line " + std::to_string(lineno) +
                              ": expected time,src,dst[,weight], got " +
                              std::to_string(fields.size()) + " fields");
        }
        detail::RawEdgeRow row;
        if (!detail::parse_double(fields[0], row.time)) {
            if (first_data_row) {
                // header row
                first_data_row = false;
                continue;
            }
            throw parse_error("line " + std::to_string(lineno) + ": bad time value '" +
                              fields[0] + "'");
        }
        first_data_row = false;
        row.src = fields[1];
        row.dst = fields[2];
        if (row.src.empty() || row.dst.empty()) {
            throw parse_error("line " + std::to_string(lineno) + ": empty node id");
        }
        row.weight = 1.0;
        if (fields.size() == 4 && !fields[3].empty()) {
            if (!detail::parse_double(fields[3], row.weight)) {
                throw parse_error("line " + std::to_string(lineno) + ": bad weight '" +
                                  fields[3] + "'");
            }
        }
        if (row.weight < 0.0) {
            throw validation_error("line " + std::to_string(lineno) + ": negative edge weight");
        }
        if (!std::isfinite(row.time) || !std::isfinite(row.weight)) {
            throw validation_error("line " + std::to_string(lineno) + ": non-finite value");
        }
        rows.push_back(std::move(row));
    }

    if (rows.empty()) {
        throw validation_error("edge stream has no rows; need at least 2 ticks");
    }

    double origin = spec.origin ? *spec.origin : rows.front().time;
    if (!spec.origin) {
        for (const auto& r : rows) origin = std::min(origin, r.time);
    }

    long long min_bucket = 0, max_bucket = 0;
    std::vector<long long> row_bucket(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const long long b =
            static_cast<long long>(std::floor((rows[i].time - origin) / spec.bucket_width));
        row_bucket[i] = b;
        if (i == 0) {
            min_bucket = max_bucket = b;
        } else {
            min_bucket = std::min(min_bucket, b);
            max_bucket = std::max(max_bucket, b);
        }
    }

    // ticks = all buckets in [min,max] minus skipped ones; empty buckets kept
    TemporalGraphSequence g;
    g.directed = directed;
    std::map<long long, std::size_t> bucket_to_tick;
    for (long long b = min_bucket; b <= max_bucket; ++b) {
        if (spec.skips(b)) continue;
        bucket_to_tick[b] = g.timestamps.size();
        g.timestamps.push_back(b);
    }
    g.snapshots.resize(g.timestamps.size());

    std::map<std::string, std::uint32_t> intern;
    auto node_index = [&](const std::string& id) -> std::uint32_t {
        auto it = intern.find(id);
        if (it != intern.end()) return it->second;
        const auto idx = static_cast<std::uint32_t>(g.node_ids.size());
        intern.emplace(id, idx);
        g.node_ids.push_back(id);
        return idx;
    };

    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto it = bucket_to_tick.find(row_bucket[i]);
        if (it == bucket_to_tick.end()) continue;  // bucket skipped
        Edge e;
        e.src = node_index(rows[i].src);
        e.dst = node_index(rows[i].dst);
        e.weight = rows[i].weight;
        if (!directed && e.src > e.dst) std::swap(e.src, e.dst);
        g.snapshots[it->second].push_back(e);
    }

    if (g.ticks() < 2) {
        throw validation_error("edge stream spans fewer than 2 ticks (got " +
                               std::to_string(g.ticks()) + ")");
    }
    return g;
}

inline TemporalGraphSequence load_edge_stream(const std::string& path, bool directed,
                                              const TickSpec& spec = {}) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open edge stream: " + path);
    }
    return load_edge_stream(in, directed, spec);
}

} // namespace selens
