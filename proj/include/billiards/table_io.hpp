#pragma once

#include "billiards/boundary.hpp"
#include "billiards/sphere.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace billiards {

using nlohmann::json;

// Table spec files:
//   {"type": "circle", "radius": R, "center": [x, y]}
//   {"type": "ellipse", "a": a, "b": b}
//   {"type": "polar_graph", "form": "support" | "radius_of_curvature", "a0": r,
//    "harmonics": [{"k": 3, "cos": c, "sin": s}, ...]}
//   {"type": "piecewise", "vertices": [[x, y], ...], "curvatures": [k0, k1, ...]}

inline TableSpec table_spec_from_json(const json& j)
{
    try {
        const std::string type = j.at("type").get<std::string>();
        if (type == "circle") {
            CircleSpec s;
            s.radius = j.at("radius").get<double>();
            if (j.contains("center"))
                s.center = Vec2(j["center"].at(0).get<double>(), j["center"].at(1).get<double>());
            return s;
        }
        if (type == "ellipse")
            return EllipseSpec{j.at("a").get<double>(), j.at("b").get<double>()};
        if (type == "polar_graph") {
            PolarGraphSpec s;
            const std::string form = j.value("form", std::string("support"));
            if (form == "support")
                s.form = PolarGraphSpec::Form::Support;
            else if (form == "radius_of_curvature")
                s.form = PolarGraphSpec::Form::RadiusOfCurvature;
            else
                throw Error(ErrorKind::InvalidSpec, "unknown polar_graph form '" + form + "'");
            s.a0 = j.at("a0").get<double>();
            for (const auto& h : j.value("harmonics", json::array()))
                s.harmonics.push_back({h.at("k").get<int>(), h.value("cos", 0.0), h.value("sin", 0.0)});
            return s;
        }
        if (type == "piecewise") {
            PiecewiseSpec s;
            for (const auto& v : j.at("vertices"))
                s.vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
            s.curvatures = j.at("curvatures").get<std::vector<double>>();
            return s;
        }
        throw Error(ErrorKind::InvalidSpec, "unknown table type '" + type + "'");
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, std::string("malformed table spec: ") + e.what());
    }
}

inline json table_spec_to_json(const TableSpec& spec)
{
    struct Visitor {
        json operator()(const CircleSpec& s) const
        {
            return {{"type", "circle"}, {"radius", s.radius}, {"center", {s.center.x(), s.center.y()}}};
        }
        json operator()(const EllipseSpec& s) const { return {{"type", "ellipse"}, {"a", s.a}, {"b", s.b}}; }
        json operator()(const PolarGraphSpec& s) const
        {
            json hs = json::array();
            for (const auto& h : s.harmonics)
                hs.push_back({{"k", h.k}, {"cos", h.cos_coeff}, {"sin", h.sin_coeff}});
            return {{"type", "polar_graph"},
                    {"form", s.form == PolarGraphSpec::Form::Support ? "support" : "radius_of_curvature"},
                    {"a0", s.a0},
                    {"harmonics", hs}};
        }
        json operator()(const PiecewiseSpec& s) const
        {
            json vs = json::array();
            for (const auto& v : s.vertices)
                vs.push_back({v.x(), v.y()});
            return {{"type", "piecewise"}, {"vertices", vs}, {"curvatures", s.curvatures}};
        }
    };
    return std::visit(Visitor{}, spec);
}

inline TableSpec load_table_spec(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::InvalidInput, "cannot open table spec '" + path + "'");
    try {
        return table_spec_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, std::string("table spec is not valid JSON: ") + e.what());
    }
}

// Sphere table spec files:
//   {"p": 1, "q": 2, "tangency_latitudes": [south, north], "cap_type": "small_circle",
//    "bulge": {"south": a, "north": b}}
// Bulge files for the nonconvex variant hold only the "bulge" object's fields.

inline SphereBigonSpec sphere_spec_from_json(const json& j)
{
    try {
        SphereBigonSpec s;
        s.p = j.at("p").get<int>();
        s.q = j.at("q").get<int>();
        if (j.contains("tangency_latitudes")) {
            s.south_latitude = j["tangency_latitudes"].at(0).get<double>();
            s.north_latitude = j["tangency_latitudes"].at(1).get<double>();
        }
        const std::string cap = j.value("cap_type", std::string("small_circle"));
        if (cap != "small_circle")
            throw Error(ErrorKind::InvalidSpec, "unsupported cap_type '" + cap + "'");
        if (j.contains("bulge")) {
            s.south_bulge = j["bulge"].value("south", 0.0);
            s.north_bulge = j["bulge"].value("north", 0.0);
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, std::string("malformed sphere spec: ") + e.what());
    }
}

inline json sphere_spec_to_json(const SphereBigonSpec& s)
{
    return {{"p", s.p},
            {"q", s.q},
            {"tangency_latitudes", {s.south_latitude, s.north_latitude}},
            {"cap_type", "small_circle"},
            {"bulge", {{"south", s.south_bulge}, {"north", s.north_bulge}}}};
}

inline json load_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, "'" + path + "' is not valid JSON: " + e.what());
    }
}

} // namespace billiards
