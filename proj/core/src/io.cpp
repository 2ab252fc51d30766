#include "modalflow/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace modalflow {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // trim to the shortest representation that still round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(shorter, "%lf", &back);
        if (back == v) return shorter;
    }
    return buf;
}

namespace {

std::ofstream open_output(const std::filesystem::path& file) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);  // binary: no platform newline mangling
    if (!out) throw InputError("cannot open for writing: " + file.string());
    return out;
}

std::ifstream open_input(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InputError("cannot open: " + file.string());
    return in;
}

json point_to_json(const Point& p) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < p.size(); ++i) arr.push_back(p[i]);
    return arr;
}

Point point_from_json(const json& arr, const char* what) {
    if (!arr.is_array() || arr.empty())
        throw InputError(std::string(what) + ": expected a non-empty array");
    Point p(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw InputError(std::string(what) + ": expected numbers");
        p[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return p;
}

void write_coord_header(std::ofstream& out, const char* prefix, int dim) {
    out << prefix;
    for (int a = 0; a < dim; ++a) out << ",coord_" << a;
    out << "\n";
}

void write_point_fields(std::ofstream& out, const Point& p) {
    for (Eigen::Index a = 0; a < p.size(); ++a) out << ',' << format_double(p[a]);
}

}  // namespace

std::unique_ptr<DensityModel> load_density_spec(const std::filesystem::path& file) {
    std::ifstream in = open_input(file);
    json spec;
    try {
        spec = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("density spec " + file.string() + ": " + e.what());
    }
    if (!spec.is_object() || !spec.contains("type") || !spec["type"].is_string())
        throw InputError("density spec " + file.string() + ": missing \"type\"");
    const std::string type = spec["type"].get<std::string>();

    if (type == "mixture") {
        if (!spec.contains("components") || !spec["components"].is_array() ||
            spec["components"].empty())
            throw InputError("mixture spec: missing \"components\"");
        std::vector<MixtureComponent> components;
        for (const json& c : spec["components"]) {
            if (!c.is_object() || !c.contains("weight") || !c.contains("mean") ||
                !c.contains("cov"))
                throw InputError("mixture spec: component needs weight, mean, cov");
            MixtureComponent mc;
            mc.weight = c["weight"].get<double>();
            mc.mean = point_from_json(c["mean"], "mixture mean");
            const json& cov = c["cov"];
            const auto d = static_cast<Eigen::Index>(mc.mean.size());
            if (!cov.is_array() || static_cast<Eigen::Index>(cov.size()) != d)
                throw InputError("mixture spec: cov must be a d x d matrix");
            mc.cov.resize(d, d);
            for (Eigen::Index i = 0; i < d; ++i) {
                const Point row = point_from_json(cov[static_cast<std::size_t>(i)], "cov row");
                if (row.size() != d) throw InputError("mixture spec: cov must be square");
                mc.cov.row(i) = row;
            }
            components.push_back(std::move(mc));
        }
        return std::make_unique<GaussianMixture>(std::move(components));
    }

    if (type == "kde") {
        if (!spec.contains("sample_file") || !spec["sample_file"].is_string())
            throw InputError("kde spec: missing \"sample_file\"");
        const std::filesystem::path sample_path =
            file.parent_path() / spec["sample_file"].get<std::string>();
        const Matrix data = load_points_csv(sample_path);
        std::vector<Point> sample(static_cast<std::size_t>(data.cols()));
        for (Eigen::Index j = 0; j < data.cols(); ++j)
            sample[static_cast<std::size_t>(j)] = data.col(j);
        const double bandwidth = spec.value("bandwidth", 0.0);
        const double trunc = spec.value("truncation_radius_in_h", 0.0);
        const double h = bandwidth > 0.0 ? bandwidth : rule_of_thumb_bandwidth(sample);
        return std::make_unique<KernelDensity>(std::move(sample), h, trunc);
    }

    throw InputError("density spec " + file.string() + ": unknown type \"" + type + "\"");
}

void save_mixture_spec(const GaussianMixture& mixture, const std::filesystem::path& file) {
    ordered_json spec;
    spec["type"] = "mixture";
    spec["components"] = json::array();
    for (const MixtureComponent& c : mixture.components()) {
        ordered_json jc;
        jc["weight"] = c.weight;
        jc["mean"] = point_to_json(c.mean);
        json cov = json::array();
        for (Eigen::Index i = 0; i < c.cov.rows(); ++i) cov.push_back(point_to_json(c.cov.row(i)));
        jc["cov"] = cov;
        spec["components"].push_back(std::move(jc));
    }
    std::ofstream out = open_output(file);
    out << spec.dump(2) << "\n";
}

Matrix load_points_csv(const std::filesystem::path& file) {
    std::ifstream in = open_input(file);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool parse_failed = false;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                // A non-numeric first line is a column header; skip it.
                if (first_content_line) {
                    parse_failed = true;
                    break;
                }
                throw InputError("points csv " + file.string() + ": bad number \"" + cell + "\"");
            }
            row.push_back(v);
        }
        first_content_line = false;
        if (parse_failed || row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size())
            throw InputError("points csv " + file.string() + ": ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError("points csv " + file.string() + ": no data");
    Matrix points(static_cast<Eigen::Index>(rows.front().size()),
                  static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (std::size_t a = 0; a < rows[j].size(); ++a)
            points(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = rows[j][a];
    return points;
}

void save_points_csv(const Matrix& points, const std::filesystem::path& file) {
    std::ofstream out = open_output(file);
    for (Eigen::Index a = 0; a < points.rows(); ++a) {
        if (a > 0) out << ',';
        out << "coord_" << a;
    }
    out << "\n";
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        for (Eigen::Index a = 0; a < points.rows(); ++a) {
            if (a > 0) out << ',';
            out << format_double(points(a, j));
        }
        out << "\n";
    }
}

void save_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& file) {
    require(!trajectory.points.empty(), "save_trajectory_csv: empty trajectory");
    std::ofstream out = open_output(file);
    write_coord_header(out, "param,level", static_cast<int>(trajectory.points.front().size()));
    for (std::size_t i = 0; i < trajectory.points.size(); ++i) {
        out << format_double(trajectory.params[i]) << ',' << format_double(trajectory.levels[i]);
        write_point_fields(out, trajectory.points[i]);
        out << "\n";
    }
}

void save_climb_csv(const ClimbResult& result, const std::filesystem::path& file) {
    require(!result.points.empty(), "save_climb_csv: empty climb");
    std::ofstream out = open_output(file);
    write_coord_header(out, "step,level", static_cast<int>(result.points.front().size()));
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        out << i << ',' << format_double(result.levels[i]);
        write_point_fields(out, result.points[i]);
        out << "\n";
    }
}

void save_labeled_csv(const Matrix& points, const std::vector<int>& labels,
                      const std::vector<Mode>& modes, const std::filesystem::path& file) {
    require(static_cast<std::size_t>(points.cols()) == labels.size(),
            "save_labeled_csv: label count mismatch");
    std::ofstream out = open_output(file);
    for (Eigen::Index a = 0; a < points.rows(); ++a) out << "coord_" << a << ',';
    out << "label,mode_level\n";
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        for (Eigen::Index a = 0; a < points.rows(); ++a)
            out << format_double(points(a, j)) << ',';
        const int label = labels[static_cast<std::size_t>(j)];
        out << label << ',';
        if (label >= 0 && static_cast<std::size_t>(label) < modes.size())
            out << format_double(modes[static_cast<std::size_t>(label)].level);
        else
            out << "nan";
        out << "\n";
    }
}

void save_labeling_csv(const ComponentLabeling& labeling, const std::filesystem::path& file) {
    const Grid& grid = labeling.grid();
    const int d = grid.box().dim();
    std::ofstream out = open_output(file);
    for (int a = 0; a < d; ++a) out << "cell_index_" << a << ',';
    out << "label\n";
    for (std::int64_t flat = 0; flat < grid.cell_count(); ++flat) {
        const std::int32_t label = labeling.label_of_cell(flat);
        if (label < 0) continue;  // below the level
        const std::vector<int> idx = grid.multi_index(flat);
        for (int a = 0; a < d; ++a) out << idx[static_cast<std::size_t>(a)] << ',';
        out << label << "\n";
    }
}

void save_rate_csv(const RateReport& report, const std::filesystem::path& file) {
    std::ofstream out = open_output(file);
    out << "step,hausdorff_distance\n";
    for (const RatePoint& rp : report.points)
        out << format_double(rp.step) << ',' << format_double(rp.hausdorff) << "\n";
}

void save_tree_json(const ClusterTree& tree, const std::filesystem::path& file) {
    ordered_json doc;
    doc["level_floor"] = tree.level_floor;
    doc["roots"] = tree.roots;
    doc["nodes"] = json::array();
    for (const TreeNode& node : tree.nodes) {
        ordered_json jn;
        jn["id"] = node.id;
        jn["parent"] = node.parent;
        jn["children"] = node.children;
        jn["birth_level"] = node.birth_level;
        jn["death_level"] = node.death_level;
        if (node.mode) {
            ordered_json jm;
            jm["id"] = node.mode->id;
            jm["location"] = point_to_json(node.mode->location);
            jm["level"] = node.mode->level;
            jn["mode"] = std::move(jm);
        } else {
            jn["mode"] = nullptr;
        }
        doc["nodes"].push_back(std::move(jn));
    }
    std::ofstream out = open_output(file);
    out << doc.dump(2) << "\n";
}

namespace {

void render_node(const ClusterTree& tree, int id, int depth, std::string& out) {
    const TreeNode& node = tree.node(id);
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += "- cluster " + std::to_string(node.id) + " [" + format_double(node.birth_level) +
           ", " + format_double(node.death_level) + ")";
    if (node.mode) {
        out += " mode(";
        for (Eigen::Index a = 0; a < node.mode->location.size(); ++a) {
            if (a > 0) out += ", ";
            out += format_double(node.mode->location[a]);
        }
        out += ") level " + format_double(node.mode->level);
    }
    out += "\n";
    for (const int child : node.children) render_node(tree, child, depth + 1, out);
}

}  // namespace

std::string render_tree_text(const ClusterTree& tree) {
    std::string out;
    for (const int root : tree.roots) render_node(tree, root, 0, out);
    return out;
}

}  // namespace modalflow
