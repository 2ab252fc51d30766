#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "modalflow/fixtures.hpp"
#include "modalflow/io.hpp"
#include "modalflow/levelset.hpp"

using namespace modalflow;
namespace fs = std::filesystem;

namespace {

Point p1(double x) {
    Point p(1);
    p[0] = x;
    return p;
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "modalflow_io_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in.good());
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return all;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (const char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

}  // namespace

TEST_CASE("numbers serialize to their shortest round-tripping form") {
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.0) == "-2");
    for (const double v : {1.0 / 3.0, 0.39894228040143268, 1e-300, 6.02214076e23,
                           0.0078518874062668198, -0.1234567890123456}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
        CHECK(s.size() <= 24);
    }
}

TEST_CASE("points survive a csv round trip exactly") {
    const fs::path file = scratch_dir() / "points_roundtrip.csv";
    Matrix pts(3, 7);
    for (Eigen::Index j = 0; j < pts.cols(); ++j)
        for (Eigen::Index a = 0; a < pts.rows(); ++a)
            pts(a, j) = std::sin(static_cast<double>(17 * j + a)) * 1e3;
    save_points_csv(pts, file);
    const Matrix back = load_points_csv(file);
    REQUIRE(back.rows() == pts.rows());
    REQUIRE(back.cols() == pts.cols());
    CHECK((back - pts).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("points csv tolerates blank lines and carriage returns") {
    const fs::path file = scratch_dir() / "points_crlf.csv";
    write_text(file, "1.5,2.5\r\n\r\n-3.0,4.0\r\n");
    const Matrix pts = load_points_csv(file);
    REQUIRE(pts.rows() == 2);
    REQUIRE(pts.cols() == 2);
    CHECK(pts(0, 0) == 1.5);
    CHECK(pts(1, 1) == 4.0);
}

TEST_CASE("points csv errors name the offending file") {
    const fs::path ragged = scratch_dir() / "points_ragged.csv";
    write_text(ragged, "1,2\n3\n");
    try {
        load_points_csv(ragged);
        FAIL("expected an error for ragged rows");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("points_ragged.csv") != std::string::npos);
    }

    const fs::path bad = scratch_dir() / "points_bad.csv";
    write_text(bad, "1,alpha\n");
    CHECK_THROWS_AS(load_points_csv(bad), InputError);

    const fs::path empty = scratch_dir() / "points_empty.csv";
    write_text(empty, "");
    CHECK_THROWS_AS(load_points_csv(empty), InputError);

    CHECK_THROWS_AS(load_points_csv(scratch_dir() / "no_such_file.csv"), InputError);
}

TEST_CASE("mixture specs survive a save and load round trip") {
    const auto fx = fixture_by_name("d_mix2");
    const fs::path file = scratch_dir() / "mixture_spec.json";
    save_mixture_spec(*fx->density, file);
    const auto loaded = load_density_spec(file);
    for (const double x : {0.0, 1.0, 2.5}) {
        Point p(2);
        p << x, 0.5 * x;
        CHECK(loaded->eval(p) == doctest::Approx(fx->density->eval(p)).epsilon(1e-15));
    }
}

TEST_CASE("kde specs resolve their sample file next to the spec") {
    const fs::path dir = scratch_dir() / "kdespec";
    fs::create_directories(dir);
    Matrix sample(1, 3);
    sample(0, 0) = 0.0;
    sample(0, 1) = 1.0;
    sample(0, 2) = 2.0;
    save_points_csv(sample, dir / "sample.csv");
    write_text(dir / "kde.json",
               "{\"type\": \"kde\", \"sample_file\": \"sample.csv\", \"bandwidth\": 1.0}\n");
    const auto kde = load_density_spec(dir / "kde.json");
    CHECK(kde->eval(p1(1.0)) == doctest::Approx(0.29429457647990646).epsilon(1e-14));
}

TEST_CASE("density spec errors are specific") {
    const fs::path dir = scratch_dir();
    write_text(dir / "spec_unknown.json", "{\"type\": \"spline\"}\n");
    CHECK_THROWS_AS(load_density_spec(dir / "spec_unknown.json"), InputError);
    write_text(dir / "spec_nocomp.json", "{\"type\": \"mixture\"}\n");
    CHECK_THROWS_AS(load_density_spec(dir / "spec_nocomp.json"), InputError);
    write_text(dir / "spec_garbled.json", "{not json");
    CHECK_THROWS_AS(load_density_spec(dir / "spec_garbled.json"), InputError);
    try {
        load_density_spec(dir / "spec_missing.json");
        FAIL("expected an error for a missing file");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("spec_missing.json") != std::string::npos);
    }
}

TEST_CASE("trajectory csv uses the documented header and columns") {
    Trajectory traj;
    traj.points = {p1(0.5), p1(0.25)};
    traj.params = {0.0, 1.0};
    traj.levels = {0.25, 0.5};
    const fs::path file = scratch_dir() / "trajectory.csv";
    save_trajectory_csv(traj, file);
    const auto lines = lines_of(slurp(file));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "param,level,coord_0");
    CHECK(lines[1] == "0,0.25,0.5");
    CHECK(lines[2] == "1,0.5,0.25");

    CHECK_THROWS_AS(save_trajectory_csv(Trajectory{}, file), InputError);
}

TEST_CASE("climb csv numbers its steps from zero") {
    ClimbResult r;
    r.points = {p1(1.0), p1(0.5)};
    r.levels = {0.1, 0.2};
    const fs::path file = scratch_dir() / "climb.csv";
    save_climb_csv(r, file);
    const auto lines = lines_of(slurp(file));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "step,level,coord_0");
    CHECK(lines[1] == "0,0.1,1");
    CHECK(lines[2] == "1,0.2,0.5");
}

TEST_CASE("labeled csv carries the mode level of each label") {
    Matrix pts(2, 3);
    pts << 0.0, 1.0, 2.0, 0.5, 1.5, 2.5;
    Mode m0;
    m0.id = 0;
    m0.location = p1(0.0);
    m0.level = 0.25;
    Mode m1;
    m1.id = 1;
    m1.location = p1(3.0);
    m1.level = 0.125;
    const fs::path file = scratch_dir() / "labeled.csv";
    save_labeled_csv(pts, {1, -1, 0}, {m0, m1}, file);
    const auto lines = lines_of(slurp(file));
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "coord_0,coord_1,label,mode_level");
    CHECK(lines[1] == "0,0.5,1,0.125");
    CHECK(lines[2] == "1,1.5,-1,nan");
    CHECK(lines[3] == "2,2.5,0,0.25");

    CHECK_THROWS_AS(save_labeled_csv(pts, {0, 1}, {m0, m1}, file), InputError);
}

TEST_CASE("component labeling csv lists exactly the active cells") {
    const auto fx = fixture_by_name("d_mix1");
    Grid grid(fx->box, 64);
    const ComponentLabeling labeling = label_components(*fx->density, 0.1, grid);
    REQUIRE(labeling.component_count() == 2);
    const fs::path file = scratch_dir() / "labeling.csv";
    save_labeling_csv(labeling, file);
    const auto lines = lines_of(slurp(file));
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] == "cell_index_0,label");
    const std::size_t active = labeling.cells_with_label(0).size() +
                               labeling.cells_with_label(1).size();
    CHECK(lines.size() == active + 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto comma = lines[i].find(',');
        REQUIRE(comma != std::string::npos);
        const int label = std::stoi(lines[i].substr(comma + 1));
        CHECK(label >= 0);
        CHECK(label <= 1);
    }
}

TEST_CASE("rate csv uses the documented two-column schema") {
    RateReport report;
    report.points = {{4e-3, 1e-2}, {2e-3, 7e-3}};
    const fs::path file = scratch_dir() / "rates.csv";
    save_rate_csv(report, file);
    const auto lines = lines_of(slurp(file));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "step,hausdorff_distance");
    CHECK(lines[1] == "0.004,0.01");
    CHECK(lines[2] == "0.002,0.007");
}

TEST_CASE("tree json carries ids, levels, and leaf modes") {
    const auto fx = fixture_by_name("d_mix1");
    Grid grid(fx->box, 64);
    const ClusterTree tree = build_cluster_tree(*fx->density, grid);
    const fs::path file = scratch_dir() / "tree.json";
    save_tree_json(tree, file);

    const nlohmann::json doc = nlohmann::json::parse(slurp(file));
    REQUIRE(doc.contains("nodes"));
    REQUIRE(doc.contains("roots"));
    CHECK(doc["level_floor"].is_number());
    REQUIRE(doc["nodes"].is_array());
    CHECK(doc["nodes"].size() == tree.nodes.size());
    for (const auto& jn : doc["nodes"]) {
        for (const char* key :
             {"id", "parent", "children", "birth_level", "death_level", "mode"})
            REQUIRE(jn.contains(key));
        const int id = jn["id"].get<int>();
        const TreeNode& node = tree.node(id);
        CHECK(jn["parent"].get<int>() == node.parent);
        CHECK(jn["birth_level"].get<double>() == node.birth_level);
        CHECK(jn["death_level"].get<double>() == node.death_level);
        if (node.is_leaf()) {
            REQUIRE(jn["mode"].is_object());
            CHECK(jn["mode"]["location"].is_array());
            CHECK(jn["mode"]["level"].is_number());
        } else {
            CHECK(jn["mode"].is_null());
        }
    }

    const std::string text = render_tree_text(tree);
    CHECK(text.find("- cluster 0") != std::string::npos);
    CHECK(text.find("\n  - cluster") != std::string::npos);  // indented children
    CHECK(text.find("mode(") != std::string::npos);
}
