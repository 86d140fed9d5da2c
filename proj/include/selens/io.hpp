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

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "selens/common.hpp"
#include "selens/evaluation.hpp"
#include "selens/types.hpp"

namespace selens {

// Shortest round-trip decimal form; keeps rewrites byte-identical without
// printing 17 digits everywhere.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Everything needed to reproduce a run; embedded verbatim in every output
// file (as # comments in CSV, as a "manifest" object in JSON).
struct RunManifest {
    std::string tool_version;
    std::string command;
    std::string config_path;
    std::vector<std::string> inputs;
    std::string out_dir;
    std::uint64_t seed = 0;
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
    return nlohmann::json{{"tool_version", m.tool_version}, {"command", m.command},
                          {"config", m.config_path},        {"inputs", m.inputs},
                          {"out_dir", m.out_dir},           {"seed", m.seed}};
}

inline void write_manifest_comments(std::ostream& out, const RunManifest& m) {
    out << "# tool_version=" << m.tool_version << '\n';
    out << "# command=" << m.command << '\n';
    out << "# config=" << m.config_path << '\n';
    for (const auto& in : m.inputs) out << "# input=" << in << '\n';
    out << "# out_dir=" << m.out_dir << '\n';
    out << "# seed=" << m.seed << '\n';
}

inline void write_score_csv(std::ostream& out, const RunManifest& m, const ScoreList& s) {
    write_manifest_comments(out, m);
    out << "tick,score\n";
    for (std::size_t t = 0; t < s.size(); ++t) {
        out << t << ',' << format_double(s.scores[t]) << '\n';
    }
}

inline void write_rank_csv(std::ostream& out, const RunManifest& m, const RankList& r,
                           const std::vector<double>& scores) {
    write_manifest_comments(out, m);
    out << "rank,tick,score\n";
    for (std::size_t pos = 0; pos < r.size(); ++pos) {
        out << (pos + 1) << ',' << r.order[pos] << ','
            << format_double(scores[r.order[pos]]) << '\n';
    }
}

inline void write_ap_delay_csv(std::ostream& out, const RunManifest& m,
                               const std::map<std::size_t, double>& ap_by_delay) {
    write_manifest_comments(out, m);
    out << "delay,ap\n";
    for (const auto& [d, ap] : ap_by_delay) {
        out << d << ',' << format_double(ap) << '\n';
    }
}

inline void write_pr_curve_csv(std::ostream& out, const RunManifest& m, const RankList& r,
                               const EventTruth& truth, std::size_t delay) {
    write_manifest_comments(out, m);
    const auto positive = expand_truth(truth, delay, r.size());
    std::size_t total = 0;
    for (bool b : positive) total += b ? 1 : 0;
    out << "rank,recall,precision\n";
    double hits = 0.0;
    for (std::size_t pos = 0; pos < r.size(); ++pos) {
        if (positive[r.order[pos]]) hits += 1.0;
        out << (pos + 1) << ',' << format_double(hits / static_cast<double>(total)) << ','
            << format_double(hits / static_cast<double>(pos + 1)) << '\n';
    }
}

inline void write_noise_csv(std::ostream& out, const RunManifest& m,
                            const std::vector<NoiseSweepRow>& rows) {
    write_manifest_comments(out, m);
    out << "strategy,k,mean_ap\n";
    for (const auto& row : rows) {
        out << row.strategy << ',' << row.k << ',' << format_double(row.mean_ap) << '\n';
    }
}

inline nlohmann::json eval_report_to_json(const EvalReport& r) {
    nlohmann::json j;
    nlohmann::json ap = nlohmann::json::array();
    for (const auto& [d, a] : r.ap_by_delay) {
        ap.push_back({{"delay", d}, {"ap", a}});
    }
    j["ap_by_delay"] = ap;
    if (r.has_significance) {
        j["significance"] = {{"trials", r.trials},
                             {"k1", r.k1},
                             {"k2", r.k2},
                             {"rand_mu", r.rand_mu},
                             {"rand_sigma", r.rand_sigma},
                             {"z_gain", r.z_defined ? nlohmann::json(r.z_gain)
                                                    : nlohmann::json("n/a")}};
    }
    return j;
}

// Truth file: one tick per line, '#' comments and blank lines ignored; an
// optional second comma-separated field is kept as the event label.
inline EventTruth load_truth(std::istream& in) {
    EventTruth truth;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        std::string body = line.substr(b);
        std::string label;
        if (const auto comma = body.find(','); comma != std::string::npos) {
            label = body.substr(comma + 1);
            body = body.substr(0, comma);
        }
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(body, &pos);
            if (v < 0) throw std::invalid_argument("negative");
            truth.event_ticks.push_back(static_cast<std::size_t>(v));
        } catch (...) {
            throw parse_error("truth line " + std::to_string(lineno) + ": bad tick '" +
                              body + "'");
        }
        truth.labels.push_back(label);
    }
    if (truth.event_ticks.empty()) {
        throw validation_error("truth file contains no event ticks");
    }
    return truth;
}

inline EventTruth load_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open truth file: " + path);
    }
    return load_truth(in);
}

} // namespace selens
