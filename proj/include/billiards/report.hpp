#pragma once

#include "billiards/beam.hpp"
#include "billiards/identity.hpp"
#include "billiards/periodic.hpp"
#include "billiards/sphere.hpp"
#include "billiards/table_io.hpp"

#include <cstdio>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

namespace billiards {

inline std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    std::ostringstream o;
    o << std::setprecision(17) << x;
    return o.str();
}

// ---- orbit dumps ----

inline constexpr const char* orbit_csv_header = "i,s,alpha,l,lambda";
inline constexpr const char* beam_csv_header = "u,v,x_or_inf,linear_flag,factor_i";

/// One row per bounce. l is the chord leaving bounce i (empty on the last row);
/// lambda is sin(alpha)/(2 kappa), inf on flat pieces. With a beam, x_i is its
/// focusing coordinate, linear_flag tells whether A_i fixes infinity and factor_i
/// is (x_i - lambda_i)^2 / lambda_i^2; both are empty on row 0.
inline std::string orbit_csv(const OrbitTrace& trace, std::optional<ProjPoint> beam = {})
{
    std::ostringstream o;
    o << orbit_csv_header;
    std::vector<ProjPoint> xs;
    std::vector<bool> linear;
    DerivativeProduct factors;
    if (beam) {
        o << ',' << beam_csv_header;
        xs = propagate(trace, *beam);
        linear = linearity_profile(trace, trace.steps());
        factors = derivative_product(trace, *beam, trace.steps());
    }
    o << '\n';
    for (std::size_t i = 0; i < trace.points.size(); ++i) {
        o << i << ',' << format_number(trace.points[i].s) << ',' << format_number(trace.points[i].alpha) << ','
          << (i < trace.steps() ? format_number(trace.chords[i].l) : "") << ',' << format_number(trace.lambdas[i]);
        if (beam) {
            const ProjPoint x = xs[i];
            o << ',' << format_number(x.u) << ',' << format_number(x.v) << ','
              << (x.is_infinite() ? std::string("inf") : format_number(x.value())) << ',';
            if (i > 0)
                o << (linear[i - 1] ? 1 : 0) << ',' << format_number(factors.factors[i - 1]);
            else
                o << ',';
        }
        o << '\n';
    }
    return o.str();
}

// ---- periodic orbits and atlas ----

inline json orbit_json(const PeriodicOrbit& o)
{
    json pts = json::array();
    for (const auto& p : o.points)
        pts.push_back({p.s, p.alpha});
    return {{"n", o.n},
            {"minimal_period", o.minimal_period},
            {"rotation_number", o.rotation_number()},
            {"points", pts},
            {"trace", o.trace},
            {"classification", stability_name(o.classification)},
            {"perimeter", o.perimeter},
            {"closure_residual", o.closure_residual}};
}

inline json periodic_json(const FindResult& r, std::size_t n)
{
    json orbits = json::array();
    for (const auto& o : r.orbits)
        orbits.push_back(orbit_json(o));
    json failures = json::array();
    for (const auto& f : r.failures)
        failures.push_back({{"seed_index", f.seed_index}, {"rotation", f.rotation}, {"reason", f.reason}});
    return {{"n", n}, {"seeds", r.seeds}, {"orbits", orbits}, {"failures", failures}};
}

/// Atlas summary plus the orbit of every located point.
inline json atlas_json(const BoundaryCurve& curve, const Atlas& atlas)
{
    json points = json::array();
    json orbits = json::array();
    std::size_t unverified = 0;
    for (const auto& p : atlas.points) {
        points.push_back({{"s", p.point.s},
                          {"alpha", p.point.alpha},
                          {"n", p.n},
                          {"minimal_period", p.minimal_period},
                          {"classification", stability_name(p.classification)},
                          {"residual", p.residual}});
        try {
            const OrbitTrace tr = iterate(curve, p.point, p.minimal_period);
            TorusConfiguration cfg;
            for (std::size_t i = 0; i < p.minimal_period; ++i)
                cfg.s.push_back(tr.points[i].s);
            orbits.push_back(orbit_json(orbit_from_configuration(curve, cfg, 1e-8)));
        } catch (const Error&) {
            ++unverified;
        }
    }
    json clusters = json::array();
    for (const auto& c : atlas.clusters)
        clusters.push_back({{"minimal_period", c.minimal_period},
                            {"size", c.members.size()},
                            {"extent", c.extent},
                            {"thickness", c.thickness},
                            {"shape", cluster_shape_name(c.shape)}});
    return {{"grid", {atlas.grid_s, atlas.grid_alpha}},
            {"n_max", atlas.n_max},
            {"occupied_cells", atlas.occupied_cells},
            {"occupied_fraction", atlas.occupied_fraction},
            {"failed_cells", atlas.failed_cells},
            {"points", points},
            {"clusters", clusters},
            {"orbits", orbits},
            {"unverified_orbits", unverified}};
}

// ---- identity scan ----

inline std::string heatmap_csv(const IdentityScan& scan)
{
    std::ostringstream o;
    o << "s0,s1,residual\n";
    for (const auto& c : scan.heatmap)
        o << format_number(c.s0) << ',' << format_number(c.s1) << ',' << format_number(c.residual) << '\n';
    return o.str();
}

inline json identity_json(const IdentityScan& scan)
{
    return {{"c", scan.c},
            {"grid", {scan.n0, scan.n1}},
            {"max_abs", scan.max_abs},
            {"min_abs", scan.evaluated ? scan.min_abs : 0.0},
            {"evaluated", scan.evaluated},
            {"skipped", scan.skipped},
            {"radius_window0", {{"min", scan.radius0.min}, {"max", scan.radius0.max}}},
            {"radius_window1", {{"min", scan.radius1.min}, {"max", scan.radius1.max}}},
            {"radius_check_max", scan.radius_check_max},
            {"radius_verified", scan.radius_verified}};
}

// ---- sphere certificate ----

inline json certificate_json(const SphereCertificate& c, const SphereBigonSpec& spec)
{
    json hist = json::object();
    for (const auto& [period, count] : c.min_period_histogram)
        hist[std::to_string(period)] = count;
    return {{"table", sphere_spec_to_json(spec)},
            {"p", c.p},
            {"q", c.q},
            {"eps", c.eps},
            {"halvings", c.halvings},
            {"samples", c.samples},
            {"failures", c.not_periodic},
            {"min_period_histogram", hist},
            {"length_stats",
             {{"min", c.length_min}, {"max", c.length_max}, {"target", two_pi * c.p}, {"max_error", c.max_length_error}}},
            {"phase_rectangle", {{"s", {c.s_min, c.s_max}}, {"alpha", {c.alpha_min, c.alpha_max}}}},
            {"closing_steps", {{"min", c.closing_min}, {"max", c.closing_max}}},
            {"max_unfold_deviation", c.max_unfold_deviation},
            {"centre_orbit", {{"period", c.centre_period}, {"length", c.centre_length}}},
            {"all_minimal_period_q", c.all_period_q},
            {"all_length_2ppi", c.all_length_2ppi}};
}

// ---- SVG ----

namespace detail {

inline std::string period_colour(std::size_t n)
{
    static const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                                    "#e6ab02", "#a6761d", "#666666", "#1f78b4", "#b2df8a"};
    return palette[n % 10];
}

inline std::string svg_open(double w, double h)
{
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return o.str();
}

/// Grey-to-red ramp on t in [0, 1].
inline std::string ramp(double t)
{
    t = std::clamp(t, 0.0, 1.0);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(255 * t + 230 * (1 - t)),
                  static_cast<int>(40 * t + 230 * (1 - t)), static_cast<int>(30 * t + 230 * (1 - t)));
    return buf;
}

} // namespace detail

/// Phase cylinder [0, L] x [0, pi] with the located periodic points, coloured by minimal period.
inline std::string atlas_svg(const Atlas& atlas, double length)
{
    const double w = 800, h = 400;
    const double cw = w / static_cast<double>(atlas.grid_s), ch = h / static_cast<double>(atlas.grid_alpha);
    std::ostringstream o;
    o << detail::svg_open(w, h);
    for (const auto& p : atlas.points)
        o << "<rect x=\"" << p.point.s / length * w << "\" y=\"" << h - p.point.alpha / pi * h - ch << "\" width=\"" << cw
          << "\" height=\"" << ch << "\" fill=\"" << detail::period_colour(p.minimal_period) << "\"/>\n";
    o << "</svg>\n";
    return o.str();
}

/// The table with each orbit drawn as a closed polygon.
inline std::string table_svg(const BoundaryCurve& curve, const std::vector<PeriodicOrbit>& orbits)
{
    constexpr int samples = 720;
    std::vector<Vec2> pts;
    Vec2 lo(HUGE_VAL, HUGE_VAL), hi(-HUGE_VAL, -HUGE_VAL);
    for (int i = 0; i < samples; ++i) {
        pts.push_back(curve.at(curve.length() * i / samples).position);
        lo = lo.cwiseMin(pts.back());
        hi = hi.cwiseMax(pts.back());
    }
    const double size = 600, margin = 20;
    const double scale = (size - 2 * margin) / std::max(hi.x() - lo.x(), hi.y() - lo.y());
    auto xy = [&](Vec2 p) {
        std::ostringstream o;
        o << margin + (p.x() - lo.x()) * scale << ',' << size - margin - (p.y() - lo.y()) * scale;
        return o.str();
    };
    std::ostringstream o;
    o << detail::svg_open(size, size) << "<polygon fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : pts)
        o << xy(p) << ' ';
    o << "\"/>\n";
    for (const auto& orb : orbits) {
        o << "<polygon fill=\"none\" stroke=\"" << detail::period_colour(orb.n) << "\" points=\"";
        for (const auto& p : orb.points)
            o << xy(curve.at(p.s).position) << ' ';
        o << "\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// Raster of log10 |residual|; cells without a valid chord are left light grey.
inline std::string heatmap_svg(const IdentityScan& scan)
{
    const double w = 600, h = 600;
    const double cw = w / static_cast<double>(scan.n1), chh = h / static_cast<double>(scan.n0);
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (const auto& c : scan.heatmap)
        if (std::isfinite(c.residual)) {
            const double v = std::log10(std::abs(c.residual) + 1e-300);
            lo = std::min(lo, std::max(v, -16.0));
            hi = std::max(hi, v);
        }
    std::ostringstream o;
    o << detail::svg_open(w, h);
    for (std::size_t k = 0; k < scan.heatmap.size(); ++k) {
        const auto& c = scan.heatmap[k];
        const std::size_t i = k / scan.n1, j = k % scan.n1;
        std::string fill = "#eeeeee";
        if (std::isfinite(c.residual)) {
            const double v = std::max(std::log10(std::abs(c.residual) + 1e-300), -16.0);
            fill = detail::ramp(hi > lo ? (v - lo) / (hi - lo) : 0.0);
        }
        o << "<rect x=\"" << j * cw << "\" y=\"" << h - (i + 1) * chh << "\" width=\"" << cw << "\" height=\"" << chh
          << "\" fill=\"" << fill << "\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

// ---- schemas ----

inline json output_schemas()
{
    const json num = {{"type", "number"}}, integer = {{"type", "integer"}}, str = {{"type", "string"}},
               boolean = {{"type", "boolean"}};
    const json pair = {{"type", "array"}, {"items", num}, {"minItems", 2}, {"maxItems", 2}};
    const json range = {{"type", "object"}, {"properties", {{"min", num}, {"max", num}}}};
    const json orbit = {
        {"type", "object"},
        {"required", {"n", "minimal_period", "rotation_number", "points", "trace", "classification", "perimeter"}},
        {"properties",
         {{"n", integer},
          {"minimal_period", integer},
          {"rotation_number", {{"type", "string"}, {"pattern", "^-?[0-9]+/[0-9]+$"}}},
          {"points", {{"type", "array"}, {"items", pair}}},
          {"trace", num},
          {"classification",
           {{"enum", {"hyperbolic", "elliptic", "parabolic", "degenerate_plus", "degenerate_minus"}}}},
          {"perimeter", num},
          {"closure_residual", num}}}};
    json schemas;
    schemas["$schema"] = "http://json-schema.org/draft-07/schema#";
    schemas["table_spec"] = {
        {"type", "object"},
        {"required", {"type"}},
        {"properties",
         {{"type", {{"enum", {"circle", "ellipse", "polar_graph", "piecewise"}}}},
          {"radius", num},
          {"center", pair},
          {"a", num},
          {"b", num},
          {"form", {{"enum", {"support", "radius_of_curvature"}}}},
          {"a0", num},
          {"harmonics",
           {{"type", "array"},
            {"items", {{"type", "object"}, {"properties", {{"k", integer}, {"cos", num}, {"sin", num}}}}}}},
          {"vertices", {{"type", "array"}, {"items", pair}}},
          {"curvatures", {{"type", "array"}, {"items", num}}}}}};
    schemas["sphere_spec"] = {{"type", "object"},
                              {"required", {"p", "q"}},
                              {"properties",
                               {{"p", integer},
                                {"q", integer},
                                {"tangency_latitudes", pair},
                                {"cap_type", {{"const", "small_circle"}}},
                                {"bulge", {{"type", "object"}, {"properties", {{"south", num}, {"north", num}}}}}}}};
    schemas["orbit_csv"] = {{"columns", {"i", "s", "alpha", "l", "lambda"}},
                            {"beam_columns", {"u", "v", "x_or_inf", "linear_flag", "factor_i"}}};
    schemas["periodic"] = {{"type", "object"},
                           {"required", {"n", "orbits"}},
                           {"properties",
                            {{"n", integer},
                             {"seeds", integer},
                             {"orbits", {{"type", "array"}, {"items", orbit}}},
                             {"failures", {{"type", "array"}}}}}};
    schemas["atlas"] = {
        {"type", "object"},
        {"required", {"grid", "n_max", "occupied_fraction", "clusters", "orbits"}},
        {"properties",
         {{"grid", pair},
          {"n_max", integer},
          {"occupied_cells", integer},
          {"occupied_fraction", num},
          {"failed_cells", integer},
          {"points", {{"type", "array"}}},
          {"clusters",
           {{"type", "array"},
            {"items",
             {{"type", "object"},
              {"properties",
               {{"minimal_period", integer},
                {"size", integer},
                {"extent", num},
                {"thickness", num},
                {"shape", {{"enum", {"point", "curve", "area"}}}}}}}}}},
          {"orbits", {{"type", "array"}, {"items", orbit}}},
          {"unverified_orbits", integer}}}};
    schemas["identity"] = {{"type", "object"},
                           {"required", {"c", "grid", "max_abs", "evaluated"}},
                           {"properties",
                            {{"c", num},
                             {"grid", pair},
                             {"max_abs", num},
                             {"min_abs", num},
                             {"evaluated", integer},
                             {"skipped", integer},
                             {"radius_window0", range},
                             {"radius_window1", range},
                             {"radius_check_max", num},
                             {"radius_verified", boolean}}}};
    schemas["heatmap_csv"] = {{"columns", {"s0", "s1", "residual"}}};
    schemas["sphere_certificate"] = {
        {"type", "object"},
        {"required", {"eps", "samples", "failures", "min_period_histogram", "length_stats"}},
        {"properties",
         {{"table", {{"$ref", "#/sphere_spec"}}},
          {"p", integer},
          {"q", integer},
          {"eps", num},
          {"halvings", integer},
          {"samples", integer},
          {"failures", integer},
          {"min_period_histogram", {{"type", "object"}, {"additionalProperties", integer}}},
          {"length_stats",
           {{"type", "object"}, {"properties", {{"min", num}, {"max", num}, {"target", num}, {"max_error", num}}}}},
          {"phase_rectangle", {{"type", "object"}, {"properties", {{"s", pair}, {"alpha", pair}}}}},
          {"closing_steps", range},
          {"max_unfold_deviation", num},
          {"centre_orbit", {{"type", "object"}, {"properties", {{"period", integer}, {"length", num}}}}},
          {"all_minimal_period_q", boolean},
          {"all_length_2ppi", boolean}}}};
    return schemas;
}

} // namespace billiards
