#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "poroflow/output.hpp"
#include "poroflow/scenarios.hpp"

using namespace poroflow;
namespace fs = std::filesystem;

namespace {

const fs::path configs_dir = fs::path(POROFLOW_SOURCE_DIR) / "configs";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("poroflow_test_" + name);
    fs::remove_all(p);
    return p;
}

ConfigError config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected ConfigError for:\n" << text);
    return ConfigError("");
}

}  // namespace

TEST_CASE("unknown keys are rejected with the line and a suggestion") {
    const auto e = config_error("scenario: manufactured\nmaterials:\n  fluid:\n    viscocity: 2.0\n");
    CHECK(e.line() == 4);
    const std::string what = e.what();
    CHECK(what.find("materials.fluid.viscocity") != std::string::npos);
    CHECK(what.find("mu0") != std::string::npos);
    const auto typo = config_error("scenario: manufactured\nmaterials:\n  solid: {lamda: 2.0}\n");
    CHECK(std::string(typo.what()).find("did you mean 'lambda'") != std::string::npos);
    CHECK(std::string(config_error("scenario: terzagi\n").what()).find("terzaghi") != std::string::npos);
}

TEST_CASE("a minimal document resolves to the scenario defaults") {
    for (auto kind : {ScenarioKind::manufactured, ScenarioKind::terzaghi, ScenarioKind::subsidence,
                      ScenarioKind::five_spot}) {
        const auto c = parse_config("scenario: " + to_string(kind) + "\n");
        CHECK(describe(c) == describe(ScenarioConfig::defaults(kind)));
    }
    CHECK(config_error("mesh: {nx: 3}\n").line() == 1);
}

TEST_CASE("shipped configs parse and match the defaults") {
    int count = 0;
    for (const auto& entry : fs::directory_iterator(configs_dir)) {
        if (entry.path().extension() != ".yaml") continue;
        ++count;
        CAPTURE(entry.path().string());
        const auto c = load_config(entry.path().string());
        CHECK(describe(c) == describe(ScenarioConfig::defaults(c.scenario)));
    }
    CHECK(count == 4);
}

TEST_CASE("broken fixtures raise ConfigError") {
    int count = 0;
    for (const auto& entry : fs::directory_iterator(configs_dir / "broken")) {
        ++count;
        CAPTURE(entry.path().string());
        CHECK_THROWS_AS(load_config(entry.path().string()), ConfigError);
    }
    CHECK(count >= 8);
    CHECK_THROWS_AS(load_config((configs_dir / "does_not_exist.yaml").string()), std::ios_base::failure);
}

TEST_CASE("values round-trip through the resolved description") {
    const auto c = parse_config(
        "scenario: five_spot\n"
        "materials:\n"
        "  permeability: {zeta: 0.25, insitu_stress: [-1.5, 0.1, 0.1, -3.0]}\n"
        "coupling: {scheme: subcycle, n_subcycles: 4, tol: 1.0e-7}\n");
    CHECK(c.permeability.zeta == 0.25);
    CHECK(c.permeability.insitu_stress.xy == 0.1);
    CHECK(c.coupling.scheme == CouplingScheme::subcycle);
    CHECK(c.coupling.n_subcycles == 4);
    const auto d = describe(c);
    CHECK(d.find("materials.permeability.zeta = 0.25\n") != std::string::npos);
    CHECK(d.find("coupling.tol = 1e-07\n") != std::string::npos);
    CHECK(parse_config("scenario: manufactured\ncoupling: {dt: steady}\n").coupling.steady());
    CHECK_THROWS_AS(parse_config("scenario: subsidence\ncoupling: {dt: steady}\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario: terzaghi\ncoupling: {dt: steady}\n"), ConfigError);
}

TEST_CASE("scenario-specific constraints") {
    CHECK_THROWS_AS(parse_config("scenario: terzaghi\nmaterials:\n  fluid: {k: 2.0}\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario: manufactured\nfive_spot: {initial_sn: 1.0}\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario: manufactured\nmaterials: 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario: manufactured\nwells: {x: 1}\n"), ConfigError);
}

TEST_CASE("heterogeneous fields") {
    const Mesh m = build_structured_grid(12, 12, 2.0, 1.0);
    const auto flat = gen_heterogeneous_field(m, HeterogeneityMode::none, 0.4, 0, 3.0);
    for (double v : flat) CHECK(v == 3.0);
    const auto layers = gen_heterogeneous_field(m, HeterogeneityMode::layered, 0.5, 0, 2.0);
    std::set<double> distinct(layers.begin(), layers.end());
    CHECK(distinct == std::set<double>{1.0, 3.0});
    const auto wave = gen_heterogeneous_field(m, HeterogeneityMode::harmonic, 0.5, 0, 2.0);
    const auto [lo, hi] = std::minmax_element(wave.begin(), wave.end());
    CHECK(*lo >= 1.0);
    CHECK(*hi <= 3.0);
    CHECK(*hi - *lo > 1.0);
    CHECK(gen_heterogeneous_field(m, HeterogeneityMode::harmonic, 0.5, 7, 2.0) == wave);
    CHECK_THROWS_AS(gen_heterogeneous_field(m, HeterogeneityMode::layered, 1.0, 0, 2.0), std::invalid_argument);
}

TEST_CASE("tolerance ranges") {
    const auto decades = parse_tolerance_range("1e-3..1e-6");
    REQUIRE(decades.size() == 4);
    CHECK(decades.front() == doctest::Approx(1e-3));
    CHECK(decades.back() == doctest::Approx(1e-6));
    const auto list = parse_tolerance_range("1e-2,5e-4");
    REQUIRE(list.size() == 2);
    CHECK(list[1] == 5e-4);
    CHECK_THROWS(parse_tolerance_range("fast"));
}

TEST_CASE("VTK round trip") {
    const auto dir = scratch("vtk");
    ensure_directory(dir.string());
    SUBCASE("single element") {
        const Mesh m = build_structured_grid(1, 1, 1.0, 1.0);
        auto st = FieldState::initial(m, 0.25, false);
        st.p = {1.0, 2.0, 3.0, 4.0};
        const auto path = (dir / "one.vtk").string();
        write_vtk(m, st, path);
        const auto f = read_vtk(path);
        CHECK(f.points == 4);
        CHECK(f.cells == 1);
        CHECK(f.point_data.at("p").values == st.p);
        CHECK(f.cell_data.at("phi").values == std::vector<double>{0.25});
        CHECK(f.point_data.count("S_n") == 0);
    }
    SUBCASE("two-phase fields") {
        const Mesh m = build_structured_grid(3, 2, 1.5, 1.0);
        auto st = FieldState::initial(m, 0.2, true);
        for (int n = 0; n < m.node_count(); ++n) {
            st.u[n] = {1e-3 * n, -2e-3 * n};
            st.p[n] = 0.1 * n + 1.0 / 3.0;
            st.s_n[n] = 1.0 - 0.05 * n;
        }
        const auto path = (dir / "two.vtk").string();
        write_vtk(m, st, path, {{}, {{"extra", std::vector<double>(m.element_count(), 7.0)}}});
        const auto f = read_vtk(path);
        CHECK(f.points == 12);
        CHECK(f.cells == 6);
        REQUIRE(f.point_data.at("u").components == 3);
        CHECK(f.point_data.at("u").values[3 * 5 + 1] == doctest::Approx(-1e-2));
        CHECK(f.point_data.at("S_n").values[4] == doctest::Approx(0.8));
        CHECK(f.point_data.at("p").tokens[0] == format_number(1.0 / 3.0));
        CHECK(f.cell_data.at("v").components == 3);
        CHECK(f.cell_data.at("extra").values[5] == 7.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("empty time series is header only") {
    const auto dir = scratch("csv");
    ensure_directory(dir.string());
    const auto path = dir / "timeseries.csv";
    write_timeseries({}, path.string());
    CHECK(slurp(path) == "time,scheme,tol,outer_iters,flow_solves,solid_solves,residual,error_u,error_p\n");
    Timeseries ts{{"u_y"}, {}};
    TimeseriesRow row;
    row.time = 0.5;
    row.scheme = "lockstep";
    row.tol = 1e-9;
    row.extra = {std::nullopt};
    ts.rows.push_back(row);
    write_timeseries(ts, path.string());
    const auto text = slurp(path);
    CHECK(text.find(",u_y\n") != std::string::npos);
    CHECK(text.find("0.5,lockstep,1e-09,0,0,0,0,,,\n") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("runs are deterministic and report exit codes") {
    auto c = ScenarioConfig::defaults(ScenarioKind::manufactured);
    c.mesh.nx = 20;
    const auto a = scratch("det");
    const auto ra = run_scenario(c, {{}, {}, a.string()});
    REQUIRE(ra.exit_code == exit_ok);
    std::map<std::string, std::string> first;
    for (const auto& f : ra.files) first[f] = slurp(a / f);
    const auto rb = run_scenario(c, {{}, {}, a.string()});
    REQUIRE(rb.exit_code == exit_ok);
    CHECK(ra.files == rb.files);
    for (const auto& f : rb.files) {
        CAPTURE(f);
        CHECK(slurp(a / f) == first[f]);
    }
    CHECK(first["manifest.txt"].find("status: ok") != std::string::npos);

    auto stalled = c;
    stalled.coupling.max_outer_iters = 1;
    CHECK(run_scenario(stalled, {{}, {}, a.string()}).exit_code == exit_not_converged);
    CHECK(run_scenario(c, {{}, {}, "/proc/poroflow/forbidden"}).exit_code == exit_io_error);
    auto invalid = c;
    invalid.coupling.tol = -1.0;
    CHECK(run_scenario(invalid, {{}, {}, a.string()}).exit_code == exit_config_error);
    fs::remove_all(a);
}

TEST_CASE("sweep writes one row per scheme and tolerance") {
    auto c = ScenarioConfig::defaults(ScenarioKind::manufactured);
    c.mesh.nx = 20;
    const auto dir = scratch("sweep");
    const auto r = run_sweep(c, {1e-4, 1e-6}, dir.string());
    REQUIRE(r.exit_code == exit_ok);
    std::istringstream in(slurp(dir / "sweep.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
    CHECK(run_sweep(ScenarioConfig::defaults(ScenarioKind::five_spot), {1e-4}, dir.string()).exit_code ==
          exit_config_error);
    fs::remove_all(dir);
}
