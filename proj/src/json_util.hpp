#pragma once

// nlohmann/json conversions shared by the serializers. Not installed.

#include <json.hpp>

#include "oam/dataset.hpp"
#include "oam/errors.hpp"

namespace oam::detail {

using nlohmann::json;

inline json scheme_to_json(const LabelScheme& s) {
    json classes = json::array();
    for (const auto& c : s.classes()) classes.push_back(c.modes());
    return {{"kind", to_string(s.kind())}, {"classes", classes}, {"numeric_labels", s.numeric_labels()}};
}

inline LabelScheme scheme_from_json(const json& j) {
    const SchemeKind kind = parse_scheme_kind(j.at("kind").get<std::string>());
    std::vector<ModeSet> classes;
    for (const auto& c : j.at("classes")) classes.emplace_back(c.get<std::vector<int>>());
    if (kind == SchemeKind::single_mode) {
        std::vector<int> modes;
        for (const auto& c : classes) {
            if (c.size() != 1) throw ParseError("single-mode class with more than one mode", 0);
            modes.push_back(c.modes().front());
        }
        return LabelScheme::single_mode(modes);
    }
    return LabelScheme::multi_mode(classes);
}

inline json norm_to_json(const NormParams& n) {
    return {{"feature_min", n.feature_min},
            {"feature_max", n.feature_max},
            {"label_min", n.label_min},
            {"label_max", n.label_max}};
}

inline NormParams norm_from_json(const json& j) {
    NormParams n;
    n.feature_min = j.at("feature_min").get<std::vector<double>>();
    n.feature_max = j.at("feature_max").get<std::vector<double>>();
    n.label_min = j.at("label_min").get<double>();
    n.label_max = j.at("label_max").get<double>();
    return n;
}

/// Parses `text`, converting nlohmann errors to ParseError with line/offset.
json parse_json(const std::string& text);

}  // namespace oam::detail
