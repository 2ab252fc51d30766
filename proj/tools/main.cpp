// modalflow: configuration-driven driver for the level-climbing and
// gradient-flow experiments. One JSON config per run; outputs are
// deterministic given (config, seed) and reruns overwrite byte-identically.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "modalflow/climb.hpp"
#include "modalflow/cluster_tree.hpp"
#include "modalflow/common.hpp"
#include "modalflow/density.hpp"
#include "modalflow/fixtures.hpp"
#include "modalflow/flow.hpp"
#include "modalflow/io.hpp"
#include "modalflow/levelset.hpp"
#include "modalflow/metrics.hpp"
#include "modalflow/rng.hpp"
#include "modalflow/sample_methods.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace modalflow;

namespace {

// configuration problems exit with 2; anything thrown later exits with 1
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_config(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open config: " + file.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + file.string() + ": " + e.what());
    }
}

void ensure_keys(const json& obj, const std::vector<std::string>& allowed,
                 const std::string& context) {
    if (!obj.is_object()) throw ConfigError(context + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(context + ": unknown key \"" + key + "\"");
    }
}

double require_positive(const json& obj, const std::string& key, const std::string& context) {
    if (!obj.contains(key)) throw ConfigError(context + ": missing \"" + key + "\"");
    if (!obj[key].is_number()) throw ConfigError(context + ": \"" + key + "\" must be a number");
    const double v = obj[key].get<double>();
    if (!(v > 0.0)) throw ConfigError(context + ": \"" + key + "\" must be positive");
    return v;
}

Point parse_point(const json& arr, const std::string& context) {
    if (!arr.is_array() || arr.empty()) throw ConfigError(context + ": expected a point array");
    Point p(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw ConfigError(context + ": point entries must be numbers");
        p[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return p;
}

Box parse_box(const json& arr, const std::string& context) {
    if (!arr.is_array() || arr.size() != 2)
        throw ConfigError(context + ": \"box\" must be [[lo...],[hi...]]");
    try {
        return Box(parse_point(arr[0], context), parse_point(arr[1], context));
    } catch (const InputError& e) {
        throw ConfigError(context + ": " + e.what());
    }
}

// Density resolution: {"fixture": name} | {"file": "spec.json"} | inline
// spec object. The working box comes from "box", the fixture, or (KDE) the
// padded sample bounding box.
struct DensitySetup {
    std::shared_ptr<const DensityModel> model;
    Box box;
    std::optional<Fixture> fixture;
};

DensitySetup resolve_density(const json& config, const fs::path& config_dir) {
    if (!config.contains("density")) throw ConfigError("config: missing \"density\"");
    const json& spec = config["density"];
    if (!spec.is_object()) throw ConfigError("config: \"density\" must be an object");

    DensitySetup setup{nullptr, Box(), std::nullopt};
    bool have_box = false;

    if (spec.contains("fixture")) {
        ensure_keys(spec, {"fixture"}, "density");
        const std::string name = spec["fixture"].get<std::string>();
        auto fx = fixture_by_name(name);
        if (!fx) throw ConfigError("density: unknown fixture \"" + name + "\"");
        setup.model = fx->density;
        setup.box = fx->box;
        have_box = true;
        setup.fixture = std::move(fx);
    } else if (spec.contains("file")) {
        ensure_keys(spec, {"file"}, "density");
        const fs::path file = config_dir / spec["file"].get<std::string>();
        try {
            setup.model = std::shared_ptr<const DensityModel>(load_density_spec(file));
        } catch (const InputError& e) {
            throw ConfigError(e.what());
        }
    } else if (spec.contains("type")) {
        const std::string type = spec["type"].get<std::string>();
        if (type == "mixture")
            ensure_keys(spec, {"type", "components"}, "density");
        else if (type == "kde")
            ensure_keys(spec, {"type", "sample_file", "bandwidth", "truncation_radius_in_h"},
                        "density");
        else
            throw ConfigError("density: unknown type \"" + type + "\"");
        const fs::path tmp = config_dir / ".inline_density_spec.json";
        {
            std::ofstream out(tmp, std::ios::binary);
            out << spec.dump();
        }
        try {
            setup.model = std::shared_ptr<const DensityModel>(load_density_spec(tmp));
        } catch (const InputError& e) {
            fs::remove(tmp);
            throw ConfigError(e.what());
        }
        fs::remove(tmp);
    } else {
        throw ConfigError("density: expected \"fixture\", \"file\", or an inline spec");
    }

    if (config.contains("box")) {
        setup.box = parse_box(config["box"], "config");
        have_box = true;
    }
    if (!have_box) {
        const auto* kde = dynamic_cast<const KernelDensity*>(setup.model.get());
        if (kde == nullptr)
            throw ConfigError("config: \"box\" is required unless the density is a fixture "
                              "or a kde (which defaults to its padded sample bounding box)");
        const Box bb = kde->sample_bounding_box();
        const double pad = 4.0 * kde->bandwidth();
        setup.box = Box(bb.lo.array() - pad, bb.hi.array() + pad);
    }
    if (setup.box.dim() != setup.model->dim())
        throw ConfigError("config: box dimension does not match the density");
    return setup;
}

// Starts: explicit [[...],...] | {"count": n} random above a level fraction
// | {"grid_per_axis": k} mesh centers above the fraction. The fraction
// defaults to 0.05 of the estimated max density.
Matrix resolve_starts(const json& spec, const DensityModel& model, const Box& box,
                      const DensityBounds& bounds, std::uint64_t seed) {
    const int d = model.dim();
    std::vector<Point> starts;

    if (spec.is_array()) {
        for (std::size_t i = 0; i < spec.size(); ++i)
            starts.push_back(parse_point(spec[i], "starts[" + std::to_string(i) + "]"));
    } else if (spec.is_object()) {
        ensure_keys(spec, {"count", "grid_per_axis", "min_level_fraction"}, "starts");
        double fraction = 0.05;
        if (spec.contains("min_level_fraction")) {
            fraction = spec["min_level_fraction"].get<double>();
            if (fraction < 0.0 || fraction >= 1.0)
                throw ConfigError("starts: \"min_level_fraction\" must lie in [0, 1)");
        }
        const double floor_level = fraction * bounds.fmax;
        if (spec.contains("count")) {
            if (spec.contains("grid_per_axis"))
                throw ConfigError("starts: give either \"count\" or \"grid_per_axis\"");
            const long count = spec["count"].get<long>();
            if (count <= 0) throw ConfigError("starts: \"count\" must be positive");
            Rng rng(seed);
            long attempts = 0;
            const long max_attempts = 100000 * count;
            while (static_cast<long>(starts.size()) < count) {
                if (++attempts > max_attempts)
                    throw StepFailedError("starts: rejection sampling exhausted "
                                          "(level fraction too high for this box?)");
                Point x = rng.uniform_in_box(box);
                if (model.eval(x) > floor_level) starts.push_back(std::move(x));
            }
        } else if (spec.contains("grid_per_axis")) {
            const int k = spec["grid_per_axis"].get<int>();
            if (k <= 0) throw ConfigError("starts: \"grid_per_axis\" must be positive");
            std::vector<int> idx(static_cast<std::size_t>(d), 0);
            while (true) {
                Point x(d);
                for (int a = 0; a < d; ++a) {
                    const double w = (box.hi[a] - box.lo[a]) / k;
                    x[a] = box.lo[a] + (idx[static_cast<std::size_t>(a)] + 0.5) * w;
                }
                if (model.eval(x) > floor_level) starts.push_back(std::move(x));
                int axis = 0;
                while (axis < d && ++idx[static_cast<std::size_t>(axis)] == k) {
                    idx[static_cast<std::size_t>(axis)] = 0;
                    ++axis;
                }
                if (axis == d) break;
            }
            if (starts.empty())
                throw ConfigError("starts: no grid point clears the level fraction");
        } else {
            throw ConfigError("starts: need \"count\" or \"grid_per_axis\"");
        }
    } else {
        throw ConfigError("config: \"starts\" must be an array of points or an object");
    }

    require(!starts.empty(), "starts: empty");
    Matrix out(d, static_cast<Eigen::Index>(starts.size()));
    for (std::size_t j = 0; j < starts.size(); ++j) {
        if (starts[j].size() != d) throw ConfigError("starts: dimension mismatch");
        out.col(static_cast<Eigen::Index>(j)) = starts[j];
    }
    return out;
}

ordered_json mode_to_json(const Mode& mode) {
    ordered_json j;
    j["id"] = mode.id;
    j["location"] = std::vector<double>(mode.location.data(),
                                        mode.location.data() + mode.location.size());
    j["level"] = mode.level;
    return j;
}

void write_json(const ordered_json& doc, const fs::path& file) {
    fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw StepFailedError("cannot open for writing: " + file.string());
    out << doc.dump(2) << "\n";
}

// --- subcommands ---------------------------------------------------------------

int cmd_flow(const json& config, const fs::path& out_dir, std::uint64_t seed) {
    ensure_keys(config,
                {"density", "box", "seed", "flow", "starts", "level_gap_fraction",
                 "ode_tolerance", "chord_tolerance"},
                "flow config");
    const DensitySetup setup = resolve_density(config, fs::current_path());
    const std::string kind = config.value("flow", std::string("gamma"));
    if (kind != "gamma" && kind != "xi" && kind != "zeta")
        throw ConfigError("flow config: \"flow\" must be gamma, xi, or zeta");
    const double gap_fraction = config.value("level_gap_fraction", 0.9);
    if (gap_fraction <= 0.0 || gap_fraction >= 1.0)
        throw ConfigError("flow config: \"level_gap_fraction\" must lie in (0,1)");
    if (!config.contains("starts")) throw ConfigError("flow config: missing \"starts\"");

    const DensityBounds bounds = estimate_bounds(*setup.model, setup.box);
    FlowControls controls = FlowControls::defaults_for(bounds, setup.box);
    if (config.contains("ode_tolerance"))
        controls.ode_tolerance = require_positive(config, "ode_tolerance", "flow config");
    if (config.contains("chord_tolerance"))
        controls.chord_tolerance = require_positive(config, "chord_tolerance", "flow config");

    const Matrix starts = resolve_starts(config["starts"], *setup.model, setup.box, bounds, seed);

    ModeRegistry registry(1e-4 * setup.box.diameter());
    ordered_json summary;
    summary["flow"] = kind;
    summary["trajectories"] = json::array();
    for (Eigen::Index j = 0; j < starts.cols(); ++j) {
        const Point x = starts.col(j);
        Trajectory traj;
        if (kind == "gamma") {
            traj = integrate_gamma(*setup.model, x, controls);
        } else if (kind == "xi") {
            traj = integrate_xi(*setup.model, x, controls);
        } else {
            // level-parameterized flow: climb a fraction of the gap up to
            // the basin peak
            const auto basin = assign_basin(*setup.model, x, controls, registry);
            if (!basin) throw StepFailedError("flow: start does not reach a mode");
            const double gap = basin->level - setup.model->eval(x);
            traj = integrate_zeta(*setup.model, x, gap_fraction * gap, controls);
        }
        const fs::path file = out_dir / ("trajectory_" + std::to_string(j) + ".csv");
        save_trajectory_csv(traj, file);

        ordered_json entry;
        entry["start"] = std::vector<double>(x.data(), x.data() + x.size());
        entry["terminal_kind"] = to_string(traj.terminal.kind);
        entry["terminal_grad_norm"] = traj.terminal.grad_norm;
        entry["points"] = traj.points.size();
        if (traj.terminal.kind == TerminalKind::mode) {
            const Point loc = newton_polish_mode(*setup.model, traj.terminal.point);
            entry["mode"] = mode_to_json(
                registry.match_or_register(loc, setup.model->eval(loc)));
        }
        summary["trajectories"].push_back(std::move(entry));
    }
    summary["modes"] = json::array();
    for (const Mode& m : registry.modes()) summary["modes"].push_back(mode_to_json(m));
    write_json(summary, out_dir / "summary.json");
    return 0;
}

int cmd_climb(const json& config, const fs::path& out_dir, std::uint64_t seed) {
    ensure_keys(config,
                {"density", "box", "seed", "algorithm", "eta", "eps", "starts",
                 "max_iterations", "cells_per_axis"},
                "climb config");
    const DensitySetup setup = resolve_density(config, fs::current_path());
    if (!config.contains("algorithm")) throw ConfigError("climb config: missing \"algorithm\"");
    const int algorithm = config["algorithm"].get<int>();
    if (algorithm != 1 && algorithm != 2)
        throw ConfigError("climb config: \"algorithm\" must be 1 or 2");
    ClimbConfig climb_config;
    if (algorithm == 1)
        climb_config.eta = require_positive(config, "eta", "climb config");
    else
        climb_config.eps = require_positive(config, "eps", "climb config");
    climb_config.max_iterations = config.value("max_iterations", 0L);
    if (!config.contains("starts")) throw ConfigError("climb config: missing \"starts\"");
    const int cells = config.value("cells_per_axis", 0) > 0
                          ? config["cells_per_axis"].get<int>()
                          : Grid::default_cells_per_axis(setup.model->dim());

    const ClimbContext ctx(*setup.model, Grid(setup.box, cells));
    const Matrix starts =
        resolve_starts(config["starts"], *setup.model, setup.box, ctx.bounds(), seed);

    long agree = 0, both_assigned = 0;
    ordered_json summary;
    summary["algorithm"] = algorithm;
    summary["climbs"] = json::array();
    for (Eigen::Index j = 0; j < starts.cols(); ++j) {
        const Point x = starts.col(j);
        const ClimbResult result = algorithm == 1 ? climb_alg1(ctx, x, climb_config)
                                                  : climb_alg2(ctx, x, climb_config);
        save_climb_csv(result, out_dir / ("climb_" + std::to_string(j) + ".csv"));

        const auto basin = assign_basin(*setup.model, x, ctx.flow(), ctx.registry());
        ordered_json entry;
        entry["start"] = std::vector<double>(x.data(), x.data() + x.size());
        entry["stop_reason"] = to_string(result.stop_reason);
        entry["iterations"] = result.iterations;
        entry["points"] = result.points.size();
        if (result.returned_mode) entry["mode"] = mode_to_json(*result.returned_mode);
        if (basin) entry["basin_mode"] = mode_to_json(*basin);
        if (result.returned_mode && basin) {
            ++both_assigned;
            if (result.returned_mode->id == basin->id) ++agree;
        }
        summary["climbs"].push_back(std::move(entry));
    }
    summary["modes"] = json::array();
    for (const Mode& m : ctx.registry().modes()) summary["modes"].push_back(mode_to_json(m));
    summary["basin_agreement"] =
        both_assigned > 0 ? static_cast<double>(agree) / static_cast<double>(both_assigned)
                          : 0.0;
    summary["basin_agreement_counts"] = {{"agree", agree}, {"compared", both_assigned}};
    write_json(summary, out_dir / "summary.json");
    return 0;
}

int cmd_tree(const json& config, const fs::path& out_dir, std::uint64_t) {
    ensure_keys(config, {"density", "box", "seed", "level_count", "level_floor",
                         "cells_per_axis"},
                "tree config");
    const DensitySetup setup = resolve_density(config, fs::current_path());
    const int level_count = config.value("level_count", 256);
    if (level_count < 2) throw ConfigError("tree config: \"level_count\" must be at least 2");
    double level_floor = -1.0;
    if (config.contains("level_floor"))
        level_floor = require_positive(config, "level_floor", "tree config");
    const int cells = config.value("cells_per_axis", 0) > 0
                          ? config["cells_per_axis"].get<int>()
                          : Grid::default_cells_per_axis(setup.model->dim());

    const Grid grid(setup.box, cells);
    const ClusterTree tree = build_cluster_tree(*setup.model, grid, level_count, level_floor);
    save_tree_json(tree, out_dir / "tree.json");
    {
        fs::create_directories(out_dir);
        std::ofstream txt(out_dir / "tree.txt", std::ios::binary);
        txt << render_tree_text(tree);
    }
    return 0;
}

int cmd_rates(const json& config, const fs::path& out_dir, std::uint64_t) {
    ensure_keys(config, {"density", "box", "seed", "algorithm", "start", "steps",
                         "cells_per_axis"},
                "rates config");
    const DensitySetup setup = resolve_density(config, fs::current_path());
    if (!config.contains("algorithm")) throw ConfigError("rates config: missing \"algorithm\"");
    const int algorithm = config["algorithm"].get<int>();
    if (algorithm != 1 && algorithm != 2)
        throw ConfigError("rates config: \"algorithm\" must be 1 or 2");
    if (!config.contains("start")) throw ConfigError("rates config: missing \"start\"");
    const Point start = parse_point(config["start"], "rates start");
    if (!config.contains("steps") || !config["steps"].is_array())
        throw ConfigError("rates config: missing \"steps\" array");
    std::vector<double> steps;
    for (const json& s : config["steps"]) {
        if (!s.is_number() || !(s.get<double>() > 0.0))
            throw ConfigError("rates config: steps must be positive numbers");
        steps.push_back(s.get<double>());
    }
    if (steps.size() < 4)
        throw ConfigError("rates config: need at least four step sizes");
    for (std::size_t i = 1; i < steps.size(); ++i)
        if (steps[i] >= steps[i - 1])
            throw ConfigError("rates config: steps must be strictly decreasing");
    const int cells = config.value("cells_per_axis", 0) > 0
                          ? config["cells_per_axis"].get<int>()
                          : Grid::default_cells_per_axis(setup.model->dim());

    const ClimbContext ctx(*setup.model, Grid(setup.box, cells));
    const RateReport report = algorithm == 1 ? rate_experiment_alg1(ctx, start, steps)
                                             : rate_experiment_alg2(ctx, start, steps);
    save_rate_csv(report, out_dir / "rates.csv");

    ordered_json doc;
    doc["algorithm"] = algorithm;
    doc["start"] = std::vector<double>(start.data(), start.data() + start.size());
    doc["slope"] = report.slope;
    doc["intercept"] = report.intercept;
    doc["two_point_slope"] = report.two_point_slope;
    doc["floor_hit"] = report.floor_hit;
    doc["mode_location"] = std::vector<double>(
        report.mode_location.data(), report.mode_location.data() + report.mode_location.size());
    doc["mode_level"] = report.mode_level;
    write_json(doc, out_dir / "rates.json");
    return 0;
}

int cmd_cluster(const json& config, const fs::path& out_dir, std::uint64_t seed) {
    ensure_keys(config,
                {"density", "box", "seed", "n", "bandwidth", "truncation_radius_in_h",
                 "methods", "eta", "eps", "cells_per_axis", "max_iterations"},
                "cluster config");
    const DensitySetup setup = resolve_density(config, fs::current_path());
    const auto* mixture = dynamic_cast<const GaussianMixture*>(setup.model.get());
    if (mixture == nullptr)
        throw ConfigError("cluster config: the density must be a mixture (it is sampled)");
    if (!config.contains("n")) throw ConfigError("cluster config: missing \"n\"");
    const long n = config["n"].get<long>();
    if (n <= 0) throw ConfigError("cluster config: \"n\" must be positive");
    const double bandwidth = config.value("bandwidth", 0.0);
    const double trunc = config.value("truncation_radius_in_h", 0.0);
    std::vector<std::string> methods = {"method1", "method2", "meanshift"};
    if (config.contains("methods")) {
        if (!config["methods"].is_array() || config["methods"].empty())
            throw ConfigError("cluster config: \"methods\" must be a non-empty array");
        methods.clear();
        for (const json& m : config["methods"]) {
            const std::string name = m.get<std::string>();
            if (name != "method1" && name != "method2" && name != "meanshift")
                throw ConfigError("cluster config: unknown method \"" + name + "\"");
            methods.push_back(name);
        }
    }

    // sample, fit, cluster
    const Matrix sample = sample_mixture(*mixture, static_cast<int>(n), seed);
    save_points_csv(sample, out_dir / "sample.csv");

    std::vector<Point> sample_points(static_cast<std::size_t>(sample.cols()));
    for (Eigen::Index j = 0; j < sample.cols(); ++j)
        sample_points[static_cast<std::size_t>(j)] = sample.col(j);
    const double h = bandwidth > 0.0 ? bandwidth : rule_of_thumb_bandwidth(sample_points);
    const KernelDensity kde(std::move(sample_points), h, trunc);

    MethodControls controls(setup.box);
    controls.eta = config.value("eta", 0.0);
    controls.eps = config.value("eps", 0.0);
    controls.cells_per_axis = config.value("cells_per_axis", 0);
    controls.max_iterations = config.value("max_iterations", 0L);

    // truth: basins of the generating mixture
    const ClusterResult truth = flow_cluster(*mixture, sample, controls);

    ordered_json report;
    report["n"] = n;
    report["bandwidth"] = h;
    report["seed"] = seed;
    report["truth_modes"] = json::array();
    for (const Mode& m : truth.modes) report["truth_modes"].push_back(mode_to_json(m));

    std::map<std::string, ClusterResult> results;
    for (const std::string& name : methods) {
        ClusterResult r;
        if (name == "method1")
            r = method1_cluster(kde, sample, controls);
        else if (name == "method2")
            r = method2_cluster(kde, sample, controls);
        else
            r = meanshift_cluster(kde, sample, controls);
        save_labeled_csv(sample, r.labels, r.modes, out_dir / ("labels_" + name + ".csv"));

        const AgreementScore vs_truth = score_agreement(r.labels, truth.labels);
        ordered_json entry;
        entry["modes"] = json::array();
        for (const Mode& m : r.modes) entry["modes"].push_back(mode_to_json(m));
        entry["cluster_count"] = r.modes.size();
        entry["unassigned"] = r.unassigned;
        entry["ari_vs_truth"] = vs_truth.ari;
        entry["pair_agreement_vs_truth"] = vs_truth.pair_agreement;
        report[name] = std::move(entry);
        results[name] = std::move(r);
    }

    report["pairwise"] = ordered_json::object();
    for (std::size_t i = 0; i < methods.size(); ++i) {
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
            const AgreementScore s =
                score_agreement(results[methods[i]].labels, results[methods[j]].labels);
            ordered_json entry;
            entry["ari"] = s.ari;
            entry["pair_agreement"] = s.pair_agreement;
            entry["points_compared"] = s.points_compared;
            report["pairwise"][methods[i] + "_vs_" + methods[j]] = std::move(entry);
        }
    }
    write_json(report, out_dir / "report.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "modalflow: level-climbing and gradient-flow clustering experiments.\n"
        "Every command reads one JSON config and writes deterministic artifacts.\n"
        "Config defaults: starts.min_level_fraction=0.05, flow=gamma,\n"
        "level_gap_fraction=0.9, level_count=256, level_floor=1e-4*max,\n"
        "cells_per_axis=256 (1D/2D) or 64 (3D), bandwidth=rule-of-thumb,\n"
        "eta=0.01*max density, eps=0.02*box diameter, seed=0.\n"
        "MODALFLOW_THREADS caps the worker count."};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::int64_t seed_flag = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file")->required();
        cmd->add_option("--out", out_dir, "output directory")->required();
        cmd->add_option("--seed", seed_flag, "master seed (overrides config \"seed\", default 0)");
    };
    add_common(app.add_subcommand("flow", "integrate gradient-flow lines (gamma, xi, zeta)"));
    add_common(app.add_subcommand("climb", "run level climbs (algorithm 1 or 2) and compare "
                                           "against gradient-flow basins"));
    add_common(app.add_subcommand("tree", "build the level-set component hierarchy"));
    add_common(app.add_subcommand("rates", "shrinking-step convergence study"));
    add_common(app.add_subcommand("cluster", "sample a mixture, fit a kernel density, and "
                                             "cluster by climbing"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems are config problems
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    json config;
    std::uint64_t seed = 0;
    try {
        config = load_config(config_path);
        if (!config.is_object()) throw ConfigError("config: expected a JSON object");
        if (config.contains("seed")) {
            if (!config["seed"].is_number_integer() || config["seed"].get<std::int64_t>() < 0)
                throw ConfigError("config: \"seed\" must be a non-negative integer");
            seed = config["seed"].get<std::uint64_t>();
        }
        if (seed_flag >= 0) seed = static_cast<std::uint64_t>(seed_flag);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        const fs::path out(out_dir);
        if (sub == "flow") return cmd_flow(config, out, seed);
        if (sub == "climb") return cmd_climb(config, out, seed);
        if (sub == "tree") return cmd_tree(config, out, seed);
        if (sub == "rates") return cmd_rates(config, out, seed);
        if (sub == "cluster") return cmd_cluster(config, out, seed);
        std::cerr << "unknown command\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
