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

#include <string>

#include "selens/detectors/ased.hpp"
#include "selens/detectors/ebed.hpp"
#include "selens/detectors/maed.hpp"
#include "selens/detectors/ptsad.hpp"
#include "selens/detectors/spirit.hpp"
#include "selens/features.hpp"
#include "selens/types.hpp"

namespace selens {

enum class Detector { ebed, ptsad, spirit, ased, maed };

inline const char* detector_name(Detector d) {
    switch (d) {
        case Detector::ebed: return "EBED";
        case Detector::ptsad: return "PTSAD";
        case Detector::spirit: return "SPIRIT";
        case Detector::ased: return "ASED";
        case Detector::maed: return "MAED";
    }
    return "?";
}

inline Detector parse_detector(const std::string& s) {
    if (s == "ebed" || s == "EBED") return Detector::ebed;
    if (s == "ptsad" || s == "PTSAD") return Detector::ptsad;
    if (s == "spirit" || s == "SPIRIT") return Detector::spirit;
    if (s == "ased" || s == "ASED") return Detector::ased;
    if (s == "maed" || s == "MAED") return Detector::maed;
    throw config_error("unknown detector '" + s + "'");
}

struct DetectorParams {
    EbedParams ebed;
    PtsadParams ptsad;
    SpiritParams spirit;
    AsedParams ased;
};

// Component id as used in reports and file names, e.g. "EBED(win)".
inline std::string component_id(Detector d, Feature f) {
    return std::string(detector_name(d)) + "(" + feature_name(f) + ")";
}

inline ScoreList run_detector(Detector d, const FeatureMatrix& fm,
                              const DetectorParams& p = {}, PtsadStats* stats = nullptr) {
    ScoreList s;
    switch (d) {
        case Detector::ebed: s = ebed(fm, p.ebed); break;
        case Detector::ptsad: s = ptsad(fm, p.ptsad, stats); break;
        case Detector::spirit: s = spirit(fm, p.spirit); break;
        case Detector::ased: s = ased(fm, p.ased); break;
        case Detector::maed: s = maed(fm); break;
    }
    s.id = component_id(d, fm.feature);
    return s;
}

inline Attribution attribute(Detector d, const FeatureMatrix& fm, std::size_t tick,
                             const DetectorParams& p = {}) {
    switch (d) {
        case Detector::ebed: return ebed_attribute(fm, tick, p.ebed);
        case Detector::ptsad: return ptsad_attribute(fm, tick, p.ptsad);
        case Detector::spirit: return spirit_attribute(fm, tick, p.spirit);
        case Detector::ased: return ased_attribute(fm, tick, p.ased);
        case Detector::maed: return maed_attribute(fm, tick);
    }
    throw config_error("unknown detector");
}

} // namespace selens
