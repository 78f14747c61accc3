#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oulab/pipeline.hpp"

using namespace oulab;
using namespace oulab::pipeline;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("oulab_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int cli(const std::string& args) {
    const int status = std::system((std::string(OULAB_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_error(const json& j) {
    try {
        parse_domain(j, "domain");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

json small_config(const fs::path& out) {
    return {{"output", out.string()},
            {"seed", 7},
            {"stages",
             json::array({
                 {{"kind", "mehler"}, {"queries", {{0, 0, 0.5}, {1, -1, 2}}}},
                 {{"kind", "kernel"}, {"domain", "interval:-1,1"}, {"grid", {{"n", 61}}}, {"t", 0.5}, {"levels", 4}},
                 {{"kind", "eigs"}, {"domain", "interval:-1,1"}, {"grid", {{"n", 201}}}, {"modes", 10}},
                 {{"kind", "trace"}, {"domain", "interval:-1,1"}, {"times", {0.5, 1, 2}}},
                 {{"kind", "bm"}, {"omega0", "interval:-1,1"}, {"omega1", "interval:-2,2"}, {"points_per_unit", 50}},
                 {{"kind", "evolve"}, {"domain", "box:0,0,1,1"}, {"grid", {{"n", 15}}}, {"times", {0.1, 0.5}}},
             })}};
}

}  // namespace

TEST_CASE("domain parsing") {
    const ConvexDomain i = parse_domain(json{{"type", "interval"}, {"a", -1}, {"b", 2}}, "domain");
    CHECK(std::get<Interval>(i).b == 2.0);
    const ConvexDomain b = parse_domain(json{{"type", "box"}, {"lo", {0, 0}}, {"hi", {1, 2}}}, "domain");
    CHECK(std::get<AxisBox>(b).hi == Point{1.0, 2.0});
    const ConvexDomain p = parse_domain_text("polygon:0,0;1,0;0,1", "domain");
    CHECK(std::get<ConvexPolygon>(p).vertices.size() == 3);
    CHECK(std::get<Interval>(parse_domain_text("interval:-0.5,0.5", "d")).a == -0.5);
    CHECK(std::get<AxisBox>(parse_domain(json("box:0,0,1,1"), "d")).hi == Point{1.0, 1.0});
    const ConvexDomain j = parse_domain_text(R"({"type": "interval", "a": 0, "b": 1})", "d");
    CHECK(std::get<Interval>(j).a == 0.0);
    CHECK(domain_to_json(i) == json{{"type", "interval"}, {"a", -1.0}, {"b", 2.0}});

    CHECK(config_error(json{{"type", "interval"}, {"a", -1}}).find("domain.b") != std::string::npos);
    CHECK(config_error(json{{"type", "disk"}, {"r", 1}}).find("domain.type") != std::string::npos);
    CHECK(config_error(json{{"type", "interval"}, {"a", 1}, {"b", -1}}).find("domain.b") != std::string::npos);
    CHECK(config_error(json{{"type", "polygon"}, {"vertices", {{0, 0}, {0, 1}, {1, 0}}}}).find("domain.vertices") !=
          std::string::npos);
    CHECK(config_error(json{{"type", "box"}, {"lo", {0}}, {"hi", {1, 1}}}).find("domain.lo") != std::string::npos);
    CHECK_THROWS_AS(parse_domain_text("interval:1;2", "d"), ConfigError);
    CHECK_THROWS_AS(parse_domain_text("interval", "d"), ConfigError);
}

TEST_CASE("grid and tolerance parsing") {
    const ConvexDomain d = Interval{-1.0, 1.0};
    const Grid g = parse_grid(json{{"n", 11}}, d, "grid");
    CHECK(g.count(0) == 11);
    CHECK(g.lo(0) == -1.0);
    const Grid wide = parse_grid(json{{"n", 21}, {"lo", -2}, {"hi", 2}}, d, "grid");
    CHECK(wide.hi(0) == 2.0);
    const Grid sq = parse_grid(json{{"n", {5, 7}}}, AxisBox{{0.0, 0.0}, {1.0, 1.0}}, "grid");
    CHECK(sq.count(1) == 7);
    CHECK(grid_to_json(g)["n"] == json{11});
    CHECK_THROWS_AS(parse_grid(json{{"n", 2}}, d, "grid"), ConfigError);
    CHECK(parse_tolerance(json("auto"), "tol").automatic);
    CHECK(parse_tolerance(json(1e-6), "tol").value == 1e-6);
    CHECK_THROWS_AS(parse_tolerance(json("tight"), "tol"), ConfigError);
    CHECK_THROWS_AS(parse_tolerance(json(-1.0), "tol"), ConfigError);
}

TEST_CASE("CSV quoting round trip") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
    const fs::path dir = scratch("csv");
    const std::vector<std::string> fields{"plain", "a,b", "say \"hi\"", "two\r\nlines", ""};
    {
        std::ofstream f(dir / "t.csv", std::ios::binary);
        for (std::size_t k = 0; k < fields.size(); ++k) f << (k ? "," : "") << csv_field(fields[k]);
        f << "\r\n1,2,3,4,5\r\n";
    }
    const auto rows = read_csv(dir / "t.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == fields);
    CHECK(rows[1].size() == 5);
    CHECK(format_number(0.1) == "0.1");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("sha256") {
    const fs::path dir = scratch("sha");
    std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
    CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK_THROWS(sha256_file(dir / "missing.txt"));
}

TEST_CASE("plot data") {
    const fs::path dir = scratch("plot");
    PlotData data;
    data.trace = TraceCurve{{0.5, 1.0}, {0.4, 0.2}, Provenance::Spectral};
    const Grid g = Grid::line(-1.0, 1.0, 21);
    data.eigen = solve_eigs(assemble_operator(Interval{-1.0, 1.0}, g), 2);
    data.bm.push_back(bm_trace_inequality(Interval{-1.0, 1.0}, Interval{-2.0, 2.0}, {0.0, 0.5, 1.0}, 1.0,
                                          Method::Spectral, ResolutionPolicy{20.0, 0, -1}));

    const auto t = emit_plot_data(data, "trace", dir);
    REQUIRE(t.size() == 1);
    auto rows = read_csv(t[0]);
    CHECK(rows[0] == std::vector<std::string>{"t", "Z", "logZ"});
    CHECK(rows.size() == 3);
    CHECK(std::stod(rows[2][2]) == doctest::Approx(std::log(0.2)));

    rows = read_csv(emit_plot_data(data, "eigenfunction", dir, "run_")[0]);
    CHECK(rows[0] == std::vector<std::string>{"x", "phi1", "log_phi1"});
    CHECK(rows.size() == 22);
    CHECK(rows[1][2].empty());  // phi1 vanishes on the boundary

    rows = read_csv(emit_plot_data(data, "bm", dir)[0]);
    CHECK(rows[0] == std::vector<std::string>{"s", "lhs", "rhs", "margin"});
    CHECK(rows.size() == 4);

    PlotData square;
    square.eigen = solve_eigs(assemble_operator(AxisBox{{0.0, 0.0}, {1.0, 1.0}}, Grid::plane({0.0, 0.0}, {1.0, 1.0}, {7, 7})), 1);
    CHECK(read_csv(emit_plot_data(square, "eigenfunction", dir, "sq_")[0])[0] ==
          std::vector<std::string>{"x", "y", "phi1", "log_phi1"});

    CHECK_THROWS_AS(emit_plot_data(data, "histogram", dir), std::invalid_argument);
    CHECK_THROWS_AS(emit_plot_data(PlotData{}, "trace", dir), std::invalid_argument);
}

TEST_CASE("run writes a complete manifest") {
    const fs::path dir = scratch("run");
    const json cfg = small_config(dir);
    const RunOutcome r = run(cfg);
    CHECK(r.exit_code == 0);
    CHECK(r.message.empty());
    REQUIRE(fs::exists(dir / "manifest.json"));
    const json m = json::parse(slurp(dir / "manifest.json"));
    CHECK(m["version"] == kVersion);
    CHECK(m["config"] == cfg);
    CHECK(m["seed"] == 7);
    CHECK(m["exit_code"] == 0);
    REQUIRE(m["stages"].size() == 6);
    std::size_t files = 0;
    for (const auto& st : m["stages"]) {
        CHECK(st["passed"] == true);
        CHECK(st["seconds"].get<double>() >= 0.0);
        for (const auto& f : st["files"]) {
            ++files;
            const fs::path p = dir / f["path"].get<std::string>();
            REQUIRE(fs::exists(p));
            CHECK(f["sha256"] == sha256_file(p));
        }
    }
    // Every artifact in the bundle is checksummed.
    std::size_t on_disk = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() != "manifest.json") ++on_disk;
    }
    CHECK(files == on_disk);
    CHECK(r.stages.size() == 6);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const json ca = small_config(a), cb = small_config(b);
    REQUIRE(run(ca).exit_code == 0);
    REQUIRE(run(cb).exit_code == 0);
    std::size_t compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
        const fs::path other = b / fs::relative(e.path(), a);
        REQUIRE(fs::exists(other));
        CHECK(slurp(e.path()) == slurp(other));
        ++compared;
    }
    CHECK(compared > 10);
    const json ma = json::parse(slurp(a / "manifest.json")), mb = json::parse(slurp(b / "manifest.json"));
    for (std::size_t s = 0; s < ma["stages"].size(); ++s) CHECK(ma["stages"][s]["files"] == mb["stages"][s]["files"]);
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("codes");
    json bad = {{"output", (dir / "bad").string()},
                {"stages", {{{"kind", "eigs"}, {"domain", {{"type", "interval"}, {"a", 1}}}}}}};
    RunOutcome r = run(bad);
    CHECK(r.exit_code == 2);
    CHECK(r.message.find("domain.b") != std::string::npos);

    CHECK(run(json{{"stages", {{{"kind", "plot"}}}}}).exit_code == 2);
    CHECK(run(json{{"output", (dir / "x").string()}, {"stages", json::array()}}).exit_code == 2);
    CHECK(run(json::array()).exit_code == 2);
    CHECK(run(json{{"output", (dir / "y").string()}, {"seed", -3}, {"stages", {{{"kind", "mehler"}}}}}).exit_code == 2);

    // The long-time Mehler kernel is log-affine in x, so only rounding noise remains; a
    // machine-level tolerance sees it.
    const json tight = {{"output", (dir / "tight").string()},
                        {"tolerance", 1e-15},
                        {"stages",
                         {{{"name", "stationary"},
                           {"kind", "kernel"},
                           {"method", "mehler"},
                           {"domain", "interval:-4,4"},
                           {"grid", {{"n", 81}}},
                           {"t", 20}}}}};
    r = run(tight);
    CHECK(r.exit_code == 1);
    CHECK(r.message.find("stationary") != std::string::npos);
    CHECK(r.message.find("joint_log_concavity") != std::string::npos);
    const json side = json::parse(slurp(dir / "tight" / "kernel.json"));
    CHECK(side["log_concavity"]["pass"] == false);
    CHECK(side["log_concavity"]["witness"].size() == 3);

    json relaxed = tight;
    relaxed["tolerance"] = "auto";
    relaxed["output"] = (dir / "relaxed").string();
    CHECK(run(relaxed).exit_code == 0);
}

TEST_CASE("command line") {
    const fs::path dir = scratch("cli");
    const std::string out = (dir / "k.csv").string();
    CHECK(cli("--version") == 0);
    CHECK(cli("--help") == 0);
    CHECK(cli("frobnicate") == 2);
    CHECK(cli("mehler eval --x 0 --z 0 --t 0.5") == 0);
    CHECK(cli("mehler eval --x 0 --z 0 --t -1") == 2);
    CHECK(cli("kernel --domain interval:1,-1 --t 0.5 --out " + out) == 2);
    CHECK(cli("kernel --domain disk:1 --t 0.5 --out " + out) == 2);
    CHECK(cli("kernel --domain interval:-1,1 --t 0.5 --grid-n 101 --levels 30 --out " + out) == 2);
    CHECK(cli("kernel --domain interval:-1,1 --t 0.5 --grid-n 101 --levels 4 --out " + out) == 0);
    CHECK(fs::exists(dir / "k.json"));
    CHECK(cli("logcc kernel --from " + out + " --out " + (dir / "lc.json").string()) == 0);
    CHECK(cli("kernel --domain interval:-1,1 --t 0.5 --grid-n 101 --require-converged --l-max 3 --out " + out) == 1);
    CHECK(cli("kernel --domain interval:-4,4 --t 20 --grid-n 81 --method mehler --tol 1e-15 --out " + out) == 1);
    CHECK(cli("eigs --domain interval:-1,1 --grid-n 201 --out " + (dir / "e.json").string()) == 0);
    CHECK(cli("trace --domain interval:-1,1 --tmin 0.5 --tmax 2 --samples 5 --out " + (dir / "t.csv").string()) == 0);
    CHECK(cli("bm --omega0 interval:-1,1 --omega1 interval:-2,2 --ppu 50 --out " + (dir / "bm.json").string()) == 0);
    CHECK(cli("bm --omega0 interval:-1,1 --omega1 box:0,0,1,1 --out " + (dir / "bm2.json").string()) == 2);
    CHECK(cli("evolve --domain interval:-1,1 --u0 builtin:bimodal --times 0.1 --out " + (dir / "ev").string()) == 0);
    CHECK(cli("evolve --domain interval:-1,1 --u0 builtin:nothing --times 0.1 --out " + (dir / "ev").string()) == 2);
    CHECK(cli("run --config " + (dir / "missing.json").string()) == 2);

    const fs::path cfg = dir / "suite.json";
    std::ofstream(cfg) << small_config(dir / "from_cli").dump(2);
    CHECK(cli("run --config " + cfg.string()) == 0);
    CHECK(fs::exists(dir / "from_cli" / "manifest.json"));
    CHECK(cli("run --config " + cfg.string() + " --out " + (dir / "override").string()) == 0);
    CHECK(fs::exists(dir / "override" / "manifest.json"));
}

TEST_CASE("shipped suite configuration parses") {
    const json cfg = load_config(fs::path(OULAB_SOURCE_DIR) / "configs" / "suite.json");
    CHECK(cfg["stages"].size() >= 10);
    CHECK_THROWS_AS(load_config(fs::path(OULAB_SOURCE_DIR) / "configs" / "absent.json"), std::invalid_argument);
}
