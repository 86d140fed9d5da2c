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

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "selens/common.hpp"
#include "selens/graph.hpp"
#include "selens/pipeline.hpp"

namespace selens {

// Plain `key = value` text config with '#' comments and dotted keys; the
// full key schema is documented in the README. Flags override file values.
using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config(std::istream& in) {
    ConfigMap cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw parse_error("config line " + std::to_string(lineno) +
                              ": expected key = value");
        }
        auto trim = [](std::string s) {
            const std::size_t x = s.find_first_not_of(" \t\r");
            const std::size_t y = s.find_last_not_of(" \t\r");
            return x == std::string::npos ? std::string{} : s.substr(x, y - x + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw parse_error("config line " + std::to_string(lineno) + ": empty key");
        }
        cfg[key] = value;
    }
    return cfg;
}

inline ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open config file: " + path);
    }
    return parse_config(in);
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        const std::size_t b = cur.find_first_not_of(" \t");
        const std::size_t e = cur.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
    }
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw config_error("config key '" + key + "': bad number '" + v + "'");
    }
}

inline long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw config_error("config key '" + key + "': bad integer '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error("config key '" + key + "': bad boolean '" + v + "'");
}

} // namespace detail

struct InputSpec {
    bool directed = true;
    TickSpec ticks;
};

// Applies a parsed config map onto the pipeline and input settings.
inline void apply_config(const ConfigMap& cfg, PipelineConfig& pc, InputSpec& input) {
    for (const auto& [key, value] : cfg) {
        if (key == "detectors") {
            pc.detectors.clear();
            for (const auto& name : detail::split_list(value)) {
                pc.detectors.push_back(parse_detector(name));
            }
        } else if (key == "features") {
            pc.features.clear();
            for (const auto& name : detail::split_list(value)) {
                pc.features.push_back(parse_feature(name));
            }
        } else if (key == "consensus") {
            pc.consensus_set.clear();
            for (const auto& name : detail::split_list(value)) {
                pc.consensus_set.push_back(parse_consensus(name));
            }
        } else if (key == "strategy") {
            pc.strategy.kind = parse_strategy(value);
        } else if (key == "phase2.strategy") {
            if (!value.empty()) {
                StrategySpec s = pc.strategy;
                s.kind = parse_strategy(value);
                pc.phase2_strategy = s;
            }
        } else if (key == "random.k1") {
            pc.strategy.k1 = static_cast<std::size_t>(detail::to_int(key, value));
        } else if (key == "random.k2") {
            pc.strategy.k2 = static_cast<std::size_t>(detail::to_int(key, value));
        } else if (key == "seed") {
            pc.master_seed = static_cast<std::uint64_t>(detail::to_int(key, value));
        } else if (key == "ebed.window") {
            pc.params.ebed.window = static_cast<std::size_t>(detail::to_int(key, value));
        } else if (key == "ptsad.round") {
            pc.params.ptsad.round_to_counts = detail::to_bool(key, value);
        } else if (key == "spirit.lambda") {
            pc.params.spirit.lambda = detail::to_double(key, value);
        } else if (key == "spirit.energy_low") {
            pc.params.spirit.energy_low = detail::to_double(key, value);
        } else if (key == "spirit.energy_high") {
            pc.params.spirit.energy_high = detail::to_double(key, value);
        } else if (key == "ased.variance_threshold") {
            pc.params.ased.variance_threshold = detail::to_double(key, value);
        } else if (key == "kemeny.mode") {
            if (value == "auto") {
                pc.kemeny_mode = KemenyMode::automatic;
            } else if (value == "exact") {
                pc.kemeny_mode = KemenyMode::exact;
            } else if (value == "heuristic") {
                pc.kemeny_mode = KemenyMode::heuristic;
            } else {
                throw config_error("config key 'kemeny.mode': expected auto|exact|heuristic");
            }
        } else if (key == "rra.bonferroni") {
            pc.rra_bonferroni = detail::to_bool(key, value);
        } else if (key == "input.directed") {
            input.directed = detail::to_bool(key, value);
        } else if (key == "input.bucket_width") {
            input.ticks.bucket_width = detail::to_double(key, value);
        } else if (key == "input.origin") {
            input.ticks.origin = detail::to_double(key, value);
        } else if (key == "input.skip_period") {
            input.ticks.skip_period = static_cast<int>(detail::to_int(key, value));
        } else if (key == "input.skip_residues") {
            input.ticks.skip_residues.clear();
            for (const auto& r : detail::split_list(value)) {
                input.ticks.skip_residues.push_back(static_cast<int>(detail::to_int(key, r)));
            }
        } else {
            throw config_error("unknown config key '" + key + "'");
        }
    }
    pc.strategy.seed = pc.master_seed;
    if (pc.phase2_strategy) {
        pc.phase2_strategy->seed = pc.master_seed;
        pc.phase2_strategy->k1 = pc.strategy.k1;
        pc.phase2_strategy->k2 = pc.strategy.k2;
    }
}

} // namespace selens
