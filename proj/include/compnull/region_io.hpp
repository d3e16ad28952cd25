#pragma once

// "region-v1" documents: JSON with infinities spelled "inf" / "-inf".

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "compnull/error.hpp"
#include "compnull/regions.hpp"

namespace compnull {

inline constexpr const char* kRegionVersion = "region-v1";

namespace detail {

inline nlohmann::json encode_real(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    return v;
}

inline double decode_real(const nlohmann::json& j, const std::string& field) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    throw ParseError("region document: " + field + ": expected a number or \"inf\"/\"-inf\"");
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key))
        throw ParseError("region document: missing field " + where + (where.empty() ? "" : ".") + key);
    return obj.at(key);
}

inline Interval decode_interval(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2)
        throw ParseError("region document: " + field + ": expected [lo, hi]");
    return {decode_real(j[0], field + "[0]"), decode_real(j[1], field + "[1]")};
}

inline nlohmann::json encode_interval(const Interval& iv) {
    return nlohmann::json::array({encode_real(iv.lo), encode_real(iv.hi)});
}

} // namespace detail

inline nlohmann::json region_to_json(const RejectionRegion2D& r) {
    using nlohmann::json;
    json cells = json::array();
    for (const auto& c : r.cells())
        cells.push_back({{"x", detail::encode_interval(c.x)}, {"y", detail::encode_interval(c.y)}, {"p", c.p}});
    json rule;
    const auto& o = r.outside_rule();
    if (o.type == OutsideRule::Type::none) {
        rule = {{"type", "none"}};
    } else {
        rule = {{"type", "joint_significance"}, {"threshold", detail::encode_real(o.threshold)}};
        if (o.box) rule["box"] = {detail::encode_interval(o.box->x), detail::encode_interval(o.box->y)};
    }
    return {{"version", kRegionVersion},
            {"alpha", r.alpha()},
            {"kind", std::string(to_string(r.kind()))},
            {"cells", std::move(cells)},
            {"outside_rule", std::move(rule)}};
}

inline std::string serialize(const RejectionRegion2D& r, int indent = -1) {
    return region_to_json(r).dump(indent);
}

inline RejectionRegion2D region_from_json(const nlohmann::json& doc) {
    using detail::require;
    if (!doc.is_object()) throw ParseError("region document: top level must be an object");
    const auto& version = require(doc, "version", "");
    if (!version.is_string() || version.get<std::string>() != kRegionVersion)
        throw ParseError("region document: version: expected \"region-v1\"");
    const double alpha = detail::decode_real(require(doc, "alpha", ""), "alpha");
    const auto& kind_j = require(doc, "kind", "");
    auto kind = kind_j.is_string() ? region_kind_from_string(kind_j.get<std::string>()) : std::nullopt;
    if (!kind) throw ParseError("region document: kind: unknown region kind");

    const auto& cells_j = require(doc, "cells", "");
    if (!cells_j.is_array()) throw ParseError("region document: cells: expected an array");
    std::vector<WeightedRect> cells;
    cells.reserve(cells_j.size());
    for (std::size_t i = 0; i < cells_j.size(); ++i) {
        const std::string where = "cells[" + std::to_string(i) + "]";
        const auto& cj = cells_j[i];
        WeightedRect c;
        c.x = detail::decode_interval(require(cj, "x", where), where + ".x");
        c.y = detail::decode_interval(require(cj, "y", where), where + ".y");
        c.p = detail::decode_real(require(cj, "p", where), where + ".p");
        cells.push_back(c);
    }

    OutsideRule rule;
    if (doc.contains("outside_rule")) {
        const auto& oj = doc.at("outside_rule");
        const auto& type = require(oj, "type", "outside_rule");
        if (!type.is_string()) throw ParseError("region document: outside_rule.type: expected a string");
        const auto t = type.get<std::string>();
        if (t == "joint_significance") {
            rule.type = OutsideRule::Type::joint_significance;
            rule.threshold = detail::decode_real(require(oj, "threshold", "outside_rule"), "outside_rule.threshold");
            if (oj.contains("box")) {
                const auto& bj = oj.at("box");
                if (!bj.is_array() || bj.size() != 2)
                    throw ParseError("region document: outside_rule.box: expected [[xlo,xhi],[ylo,yhi]]");
                rule.box = Box{detail::decode_interval(bj[0], "outside_rule.box[0]"),
                               detail::decode_interval(bj[1], "outside_rule.box[1]")};
            }
        } else if (t != "none") {
            throw ParseError("region document: outside_rule.type: unknown rule \"" + t + "\"");
        }
    }
    return RejectionRegion2D(alpha, *kind, std::move(cells), std::move(rule));
}

inline RejectionRegion2D deserialize(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("region document: invalid JSON: ") + e.what());
    }
    return region_from_json(doc);
}

inline RejectionRegion2D load_region(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open region file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

inline void save_region(const RejectionRegion2D& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write region file " + path);
    out << serialize(r) << '\n';
}

} // namespace compnull
