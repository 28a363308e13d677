#include "billiards/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <numeric>

using namespace billiards;

namespace {

void write_output(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::InvalidInput, "cannot write '" + path + "'");
    out << text;
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& text)
{
    const auto x = text.find('x');
    try {
        if (x != std::string::npos) {
            std::size_t used = 0;
            const long a = std::stol(text.substr(0, x), &used);
            if (used == x) {
                const long b = std::stol(text.substr(x + 1), &used);
                if (used == text.size() - x - 1 && a > 0 && b > 0)
                    return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
            }
        }
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidInput, "grid must look like 200x200, got '" + text + "'");
}

std::optional<ArcWindow> parse_window(const std::string& text)
{
    if (text.empty())
        return std::nullopt;
    const auto colon = text.find(':');
    try {
        if (colon != std::string::npos)
            return ArcWindow{std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidInput, "window must look like begin:end, got '" + text + "'");
}

std::pair<long, long> parse_rotation(const std::string& text)
{
    const auto slash = text.find('/');
    try {
        if (slash != std::string::npos) {
            const long p = std::stol(text.substr(0, slash)), q = std::stol(text.substr(slash + 1));
            if (p > 0 && q > 0)
                return {p, q};
        }
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidInput, "rotation must look like p/q with p, q > 0, got '" + text + "'");
}

ProjPoint parse_beam(const std::string& text)
{
    if (text == "inf" || text == "infinity")
        return ProjPoint::infinity();
    try {
        std::size_t used = 0;
        const double x = std::stod(text, &used);
        if (used == text.size() && std::isfinite(x))
            return ProjPoint::finite(x);
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidInput, "beam must be a number or 'inf', got '" + text + "'");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Billiard maps: orbits, periodic orbits, curvature identities and spherical counterexamples"};
    app.require_subcommand(0, 1);
    bool schema = false;
    app.add_flag("--schema", schema, "Print the JSON schemas of all machine-readable outputs");

    std::string table_path, out_path, svg_path;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::optional<double> tol;

    auto common = [&](CLI::App* cmd, bool needs_table) {
        if (needs_table)
            cmd->add_option("--table", table_path, "Table spec JSON")->required();
        cmd->add_option("--out", out_path, "Output file (default stdout)");
        cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed, "Seed for stochastic searches");
        cmd->add_option("--tol", tol, "Override the command's default tolerance");
    };

    // orbit
    auto* orbit = app.add_subcommand("orbit", "Iterate the billiard map and dump the orbit as CSV");
    common(orbit, true);
    double s0 = 0.0, alpha0 = pi / 2;
    std::size_t steps = 10;
    std::string beam;
    orbit->add_option("--s", s0, "Initial arclength")->required();
    orbit->add_option("--alpha", alpha0, "Initial angle in (0, pi)")->required();
    orbit->add_option("--steps", steps, "Number of bounces");
    orbit->add_option("--beam", beam, "Initial focusing coordinate x0 (a number or inf)");

    // periodic
    auto* periodic = app.add_subcommand("periodic", "Find periodic orbits, or scan phase space with --atlas");
    common(periodic, true);
    std::size_t n = 0, n_max = 5, offsets = 8;
    std::string rotation, atlas_grid;
    periodic->add_option("--n", n, "Period");
    periodic->add_option("--rotation", rotation, "Rotation number p/q");
    periodic->add_option("--offsets", offsets, "Seeds per rotation number");
    periodic->add_option("--atlas", atlas_grid, "Scan a GxG phase-space grid instead");
    periodic->add_option("--n-max", n_max, "Largest period in the atlas scan");
    periodic->add_option("--svg", svg_path, "Also write an SVG picture");

    // identity
    auto* identity = app.add_subcommand("identity", "Scan the endpoint curvature identity over two arc windows");
    common(identity, true);
    std::string window0, window1, grid = "100x100", heatmap_path;
    double c_value = 0.0;
    identity->add_option("--window0", window0, "Arc window begin:end for s0 (default whole boundary)");
    identity->add_option("--window1", window1, "Arc window begin:end for s1 (default whole boundary)");
    identity->add_option("--c", c_value, "Constant c in the identity");
    identity->add_option("--grid", grid, "Grid size n0xn1");
    identity->add_option("--heatmap", heatmap_path, "Write the residual heatmap CSV");
    identity->add_option("--svg", svg_path, "Write the residual heatmap SVG");

    // sphere
    auto* sphere = app.add_subcommand("sphere", "Certify the open set of periodic orbits in a spherical bigon table");
    common(sphere, false);
    int p = 1, q = 2;
    std::string spec_path, bulge_path;
    std::vector<double> latitudes;
    double eps = 1e-2;
    std::size_t samples = 10000;
    sphere->add_option("--p", p, "Numerator of the bigon angle p pi / q");
    sphere->add_option("--q", q, "Denominator of the bigon angle");
    sphere->add_option("--spec", spec_path, "Sphere table spec JSON (overrides --p/--q)");
    sphere->add_option("--latitudes", latitudes, "Tangency latitudes south north")->expected(2);
    sphere->add_option("--nonconvex", bulge_path, "Bulge JSON {\"south\": a, \"north\": b} for the cap arcs");
    sphere->add_option("--eps", eps, "Initial neighbourhood half-width");
    sphere->add_option("--samples", samples, "Samples per certificate attempt");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (schema) {
            std::cout << output_schemas().dump(2) << '\n';
            return 0;
        }
        if (orbit->parsed()) {
            const BoundaryCurve curve = make_table(load_table_spec(table_path));
            const OrbitTrace trace = iterate(curve, {s0, alpha0}, steps);
            write_output(out_path, orbit_csv(trace, beam.empty() ? std::nullopt : std::optional(parse_beam(beam))));
        } else if (periodic->parsed()) {
            const BoundaryCurve curve = make_table(load_table_spec(table_path));
            if (!atlas_grid.empty()) {
                const auto [gs, ga] = parse_grid(atlas_grid);
                ScanOptions opt;
                opt.jobs = jobs;
                if (tol)
                    opt.residual_tol = *tol;
                const Atlas atlas = scan_phase_space(curve, n_max, gs, ga, opt);
                write_output(out_path, atlas_json(curve, atlas).dump(2) + "\n");
                if (!svg_path.empty())
                    write_output(svg_path, atlas_svg(atlas, curve.length()));
            } else {
                FindOptions opt;
                opt.seed = seed;
                opt.jobs = jobs;
                opt.offsets = offsets;
                if (tol)
                    opt.closure_tol = *tol;
                if (!rotation.empty()) {
                    const auto [rp, rq] = parse_rotation(rotation);
                    if (n == 0)
                        n = static_cast<std::size_t>(rq);
                    if ((rp * static_cast<long>(n)) % rq != 0)
                        throw Error(ErrorKind::InvalidInput, "rotation number " + rotation + " is not compatible with n");
                    opt.rotations = {rp * static_cast<long>(n) / rq};
                }
                if (n == 0)
                    throw Error(ErrorKind::InvalidInput, "periodic needs --n, --rotation or --atlas");
                const FindResult r = find_periodic(curve, n, opt);
                write_output(out_path, periodic_json(r, n).dump(2) + "\n");
                if (!svg_path.empty())
                    write_output(svg_path, table_svg(curve, r.orbits));
            }
        } else if (identity->parsed()) {
            const BoundaryCurve curve = make_table(load_table_spec(table_path));
            const ArcWindow whole{0.0, curve.length()};
            const auto [n0, n1] = parse_grid(grid);
            const IdentityScan scan = identity_scan(curve, parse_window(window0).value_or(whole),
                                                    parse_window(window1).value_or(whole), c_value, n0, n1, jobs);
            write_output(out_path, identity_json(scan).dump(2) + "\n");
            if (!heatmap_path.empty())
                write_output(heatmap_path, heatmap_csv(scan));
            if (!svg_path.empty())
                write_output(svg_path, heatmap_svg(scan));
        } else if (sphere->parsed()) {
            SphereBigonSpec spec;
            if (!spec_path.empty())
                spec = sphere_spec_from_json(load_json_file(spec_path));
            else {
                spec.p = p;
                spec.q = q;
            }
            if (!latitudes.empty()) {
                spec.south_latitude = latitudes[0];
                spec.north_latitude = latitudes[1];
            }
            if (!bulge_path.empty()) {
                const json b = load_json_file(bulge_path);
                spec.south_bulge = b.value("south", 0.0);
                spec.north_bulge = b.value("north", 0.0);
            }
            const SphereBigonTable table(spec);
            SphereCertificateOptions opt;
            opt.eps = eps;
            opt.samples = samples;
            opt.seed = seed;
            opt.jobs = jobs;
            if (tol)
                opt.period_tol = *tol;
            write_output(out_path, certificate_json(certify_open_set(table, opt), spec).dump(2) + "\n");
        } else {
            std::cout << app.help();
        }
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return is_input_error(e.kind()) ? 2 : 3;
    } catch (const json::exception& e) {
        std::cerr << "invalid-spec: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
