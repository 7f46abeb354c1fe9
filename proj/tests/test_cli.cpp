#include <z2forge/cli.hpp>
#include <z2forge/oracles.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

using namespace z2forge;
using namespace z2forge::cli;

namespace {

ScenarioConfig cfg(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

}  // namespace

TEST(Catalog, NamesAreUniqueAndResolvable) {
    std::set<std::string> names;
    for (const auto& s : catalog()) {
        EXPECT_TRUE(names.insert(s.name).second) << s.name;
        EXPECT_GT(s.budget_s, 0);
        EXPECT_NO_THROW(resolve({s.name, {}}));
    }
    EXPECT_EQ(names.size(), 18u);
    EXPECT_THROW(find_scenario("nope"), unknown_scenario);
}

TEST(Config, ParsesCommentsAndReservedKeys) {
    const auto c = cfg("# header\nscenario = link-rabi-ideal\n\nh = 0.5  # field\nout=/tmp/x\n");
    EXPECT_EQ(c.scenario, "link-rabi-ideal");
    EXPECT_EQ(c.out_dir, "/tmp/x");
    EXPECT_EQ(c.overrides.at("h"), "0.5");
    EXPECT_THROW(cfg("scenario link-rabi-ideal\n"), invalid_parameter);
    EXPECT_THROW(cfg("= 3\n"), invalid_parameter);
    ScenarioConfig d = c;
    apply_set(d, "h=2");
    EXPECT_EQ(d.overrides.at("h"), "2");
    EXPECT_THROW(apply_set(d, "h"), invalid_parameter);
}

TEST(Config, ValueLists) {
    EXPECT_EQ(parse_values("0.3, 0.1,0.2,0.1"), (std::vector<double>{0.1, 0.2, 0.3}));
    const auto r = parse_values("0.1:0.8:0.05");
    ASSERT_EQ(r.size(), 15u);
    EXPECT_NEAR(r.back(), 0.8, 1e-12);
    EXPECT_THROW(parse_values("1:0:0.1"), invalid_parameter);
    EXPECT_THROW(parse_values("a,b"), invalid_parameter);
    EXPECT_THROW(parse_number("x", "1.5e"), invalid_parameter);
    EXPECT_EQ(parse_number("x", "+2"), 2.0);
}

TEST(Resolve, RejectsUnknownKeysAndBadAxes) {
    EXPECT_THROW(resolve(cfg("scenario = link-rabi-ideal\nbogus = 1\n")), invalid_parameter);
    EXPECT_THROW(resolve(cfg("scenario = link-rabi-ideal\nsweep.axis = bogus\nsweep.values = 1\n")), invalid_parameter);
    EXPECT_THROW(resolve(cfg("scenario = link-rabi-ideal\nsweep.axis = h\n")), invalid_parameter);
    EXPECT_THROW(resolve(cfg("h = 1\n")), invalid_parameter);
    EXPECT_THROW(resolve(cfg("scenario = missing\n")), unknown_scenario);
    const auto r = resolve(cfg("scenario = ls-sweep\n"));
    EXPECT_EQ(r.sweep_axis, "omega12_mhz");
    EXPECT_EQ(r.sweep_values.size(), 7u);
    EXPECT_EQ(resolve(cfg("scenario = chain-string-breaking\n"), true).params.integer("N"), 80);
}

TEST(Validate, PhysicsWarnings) {
    const auto w = validate(cfg("scenario = ls-full\n"));
    ASSERT_FALSE(w.empty());
    EXPECT_NE(w.front().find("delta >> |Omega12|"), std::string::npos);
    EXPECT_TRUE(validate(cfg("scenario = ls-full\nomega12_mhz = 0\n")).empty());
    EXPECT_FALSE(validate(cfg("scenario = plaquette-bell\ndelta2 = 2\n")).empty());
    EXPECT_TRUE(validate(cfg("scenario = plaquette-bell\n")).empty());
    EXPECT_FALSE(validate(cfg("scenario = sdf-trotter\nomega_mhz = 5\n")).empty());
    EXPECT_THROW(validate(cfg("scenario = link-rabi-ideal\nn_max = -1\n")), invalid_parameter);
    EXPECT_THROW(validate(cfg("scenario = link-rabi-ideal\nh = abc\n")), invalid_parameter);
}

TEST(Run, LinkRabiMatchesOracle) {
    const auto r = resolve(cfg("scenario = link-rabi-ideal\nh = 0.5\n"));
    const auto res = run(r);
    const Table& t = res.table;
    ASSERT_EQ(t.rows.size(), 200u);
    const auto ti = t.column("time"), n2 = t.column("n2"), sx = t.column("sx"), g = t.column("gauss");
    for (const auto& row : t.rows) {
        const auto o = rabi_link(row[ti], {1.0, 0.5});
        EXPECT_NEAR(row[n2], o.n2, 1e-8);
        EXPECT_NEAR(row[sx], o.sx, 1e-8);
        EXPECT_NEAR(row[g], t.rows.front()[g], 1e-12);  // conserved
    }
}

// property: sweeps are ordered by value and independent of the worker count
TEST(Run, SweepDeterministicAcrossWorkers) {
    auto c = cfg("scenario = link-rabi-ideal\npoints = 20\nsweep.axis = h\nsweep.values = 2,0,0.5,1\n");
    const auto r = resolve(c);
    const auto a = run(r, {1}), b = run(r, {3});
    EXPECT_EQ(csv_text(r, a), csv_text(r, b));
    EXPECT_EQ(a.hash, b.hash);
    const auto& t = a.table;
    ASSERT_EQ(t.rows.size(), 80u);
    EXPECT_EQ(t.columns.front(), "h");
    for (std::size_t k = 1; k < t.rows.size(); ++k) EXPECT_LE(t.rows[k - 1][0], t.rows[k][0]);
    // config hash follows the parameters
    apply_set(c, "t_end=5");
    EXPECT_NE(config_hash(resolve(c)), a.hash);
}

TEST(Run, ColumnFilter) {
    const auto r = resolve(cfg("scenario = link-rabi-ideal\npoints = 5\ncolumns = sx\n"));
    const auto t = run(r).table;
    EXPECT_EQ(t.columns, (std::vector<std::string>{"time", "sx"}));
    EXPECT_THROW(run(resolve(cfg("scenario = link-rabi-ideal\ncolumns = nope\n"))), invalid_parameter);
}

TEST(Output, CsvAndMeta) {
    const auto r = resolve(cfg("scenario = link-noon\npoints = 11\n"));
    const auto res = run(r);
    const std::string csv = csv_text(r, res);
    EXPECT_EQ(csv.rfind("# scenario: link-noon", 0), 0u);
    EXPECT_NE(csv.find("config_hash: " + res.hash), std::string::npos);
    EXPECT_NE(csv.find("time,n1,n2,sx,gauss,sx_exact,noon_fidelity"), std::string::npos);
    const auto meta = nlohmann::json::parse(meta_text(r, res));
    EXPECT_EQ(meta["scenario"], "link-noon");
    EXPECT_EQ(meta["config_hash"], res.hash);
    EXPECT_EQ(meta["parameters"]["n_max"], "2");
    EXPECT_EQ(meta["rows"], 11);
    const auto dir = std::filesystem::temp_directory_path() / "z2forge_cli_test";
    write_outputs(r, res, dir.string());
    EXPECT_TRUE(std::filesystem::exists(dir / "link-noon.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "link-noon.meta.json"));
    std::filesystem::remove_all(dir);
}

TEST(Guarded, ExitCodes) {
    std::ostringstream err;
    EXPECT_EQ(guarded([] { return 0; }, err), ok);
    EXPECT_EQ(guarded([]() -> int { find_scenario("x"); return 0; }, err), unknown_scenario_code);
    EXPECT_EQ(guarded([]() -> int { throw invalid_parameter("bad"); }, err), invalid_code);
    EXPECT_EQ(guarded([]() -> int { throw numerical_failure("nan"); }, err), numerical_code);
    EXPECT_NE(err.str().find("invalid parameter: bad"), std::string::npos);
}

TEST(Detail, MirrorAsymmetry) {
    // string links 2..4 for string(1,2); mirror pairs (l, 6 - l)
    EXPECT_EQ(cli::detail::mirror_asymmetry({0.1, 0.5, 0.7, 0.5, 0.1}, 1, 2), 0.0);
    EXPECT_NEAR(cli::detail::mirror_asymmetry({0.1, 0.5, 0.7, 0.4, 0.1}, 1, 2), 0.1, 1e-15);
}
