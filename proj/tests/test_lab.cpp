#include "lab/builders.hpp"
#include "fbdrift/common/errors.hpp"
#include "fbdrift/lab/config.hpp"
#include "fbdrift/lab/experiments.hpp"
#include "fbdrift/lab/plotdata.hpp"
#include "fbdrift/lab/records.hpp"
#include "fbdrift/lab/verify.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fbd;
using namespace fbd::lab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("fbdrift_lab_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ExperimentConfig config(const std::string& yaml_like_json, const fs::path& out) {
    auto cfg = ExperimentConfig::from_document(json::parse(yaml_like_json));
    cfg.out_dir = out.string();
    return cfg;
}

bool contains(const std::vector<std::string>& v, const std::string& needle) {
    return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

const char* kFlow = R"({"kind": "flow", "seed": 3, "params": {
    "drift": {"kind": "linear", "dimension": 3, "cutoff_radius": 1.0, "A": [[0, -1, 0], [1, 0, 0], [0, 0, -0.5]]},
    "per_axis": 2, "half_width": 1.0, "r_list": [1, 2],
    "simulation": {"T": 0.2, "dt": 0.01, "paths": 40}}})";

}  // namespace

TEST_CASE("digest ignores key order, workers and output directory") {
    const auto a = ExperimentConfig::from_document(
        json::parse(R"({"kind": "formbound", "params": {"drift": {"kind": "zero", "dimension": 3}, "times": [0.0]}})"));
    auto b = ExperimentConfig::from_document(
        json::parse(R"({"params": {"times": [0.0], "drift": {"dimension": 3, "kind": "zero"}}, "kind": "formbound"})"));
    CHECK(a.digest() == b.digest());
    b.workers = 4;
    b.out_dir = "elsewhere";
    CHECK(a.digest() == b.digest());
    CHECK(a.experiment_id() == "formbound-" + a.digest().substr(0, 12));
    b.params["times"] = json::array({0.5});
    CHECK(a.digest() != b.digest());
}

TEST_CASE("configuration problems are all reported") {
    auto cfg = ExperimentConfig::from_document(json::parse(
        R"({"kind": "simulate", "workers": 0, "params": {"drift": {"kind": "bogus"}, "colour": 1}})"));
    const auto p = cfg.problems();
    CHECK(contains(p, "workers"));
    CHECK(contains(p, "seed"));
    CHECK(contains(p, "params.colour"));
    CHECK(contains(p, "params.drift"));
    CHECK(p.size() >= 4);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    const auto unknown = ExperimentConfig::from_document(json::parse(R"({"kind": "teleport", "params": {}})"));
    REQUIRE(unknown.problems().size() == 1);
    CHECK(unknown.problems()[0].find("unknown experiment kind") != std::string::npos);
    CHECK(ExperimentConfig::known_kind("criticality"));
    CHECK_FALSE(ExperimentConfig::stochastic("formbound"));
}

TEST_CASE("parameter blocks parse into module configurations") {
    const auto cfg = ExperimentConfig::from_document(json::parse(kFlow));
    CHECK_NOTHROW(detail::parse_all(cfg));
    const auto flow = detail::flow_params(detail::effective_params(cfg));
    CHECK(flow.per_axis == 2);
    CHECK(flow.sim.paths == 40);
    CHECK(flow.sim.seed == 3);
    CHECK(flow.r_list == std::vector<int>{1, 2});
}

TEST_CASE("formbound of the zero field is one record") {
    const auto cfg = ExperimentConfig::from_document(
        json::parse(R"({"kind": "formbound", "params": {"drift": {"kind": "zero", "dimension": 3}}})"));
    const auto rs = run_experiment(cfg);
    REQUIRE(rs.records().size() == 1);
    CHECK(rs.records()[0].metric == "delta_hat");
    CHECK(rs.records()[0].value == 0.0);
    CHECK(rs.records()[0].experiment_id == cfg.experiment_id());
    CHECK(rs.records()[0].digest == cfg.digest());
}

TEST_CASE("an infeasible cascade fails without leaving a directory") {
    const auto out = scratch("infeasible");
    const auto cfg = config(R"({"kind": "pde-cascade", "params": {
        "drift": {"kind": "zero", "dimension": 3, "cutoff_radius": 1.0},
        "sources": {"copies": 2, "field": {"kind": "poly_bump", "radius": 0.3, "power": 3, "amplitude": 1.0}},
        "delta_hat": 0.2, "nu_hat": 0.01, "eps": 100.0, "beta": 0.3, "grid": {"intervals": 16}}})",
                            out);
    std::ostringstream o, e;
    CHECK(run(cfg, o, e) == 1);
    const auto rep = json::parse(e.str());
    CHECK(rep["code"] == "infeasible-constants");
    CHECK(rep["status"] == "error");
    CHECK(fs::is_empty(out));
}

TEST_CASE("configuration errors exit with status 2") {
    const auto out = scratch("badconfig");
    const auto cfg = config(R"({"kind": "simulate", "params": {"drift": {"kind": "zero", "dimension": 3}}})", out);
    std::ostringstream o, e;
    CHECK(run(cfg, o, e) == 2);
    CHECK(json::parse(e.str())["errors"].size() >= 1);
    CHECK(fs::is_empty(out));
}

TEST_CASE("flow run persists records and per-r plot tables") {
    const auto out = scratch("flow");
    const auto cfg = config(kFlow, out);
    std::ostringstream o, e;
    REQUIRE(run(cfg, o, e) == 0);
    const auto dir = out / cfg.experiment_id();
    REQUIRE(fs::exists(dir / "records.jsonl"));
    CHECK(fs::exists(dir / "config.json"));

    const auto recs = read_records((dir / "records.jsonl").string());
    REQUIRE_FALSE(recs.empty());
    for (const auto& r : recs) {
        CHECK(r.experiment_id == cfg.experiment_id());
        CHECK(r.digest == cfg.digest());
        CHECK_FALSE(r.timestamp.empty());
    }

    const auto tables = emit_plotdata(dir.string(), "prop2i");
    REQUIRE(tables.size() == 2);
    CHECK(tables[0].name == "prop2i_r1");
    CHECK(tables[1].name == "prop2i_r2");
    for (const auto& t : tables) {
        CHECK(t.columns == std::vector<std::string>{"t", "norm", "envelope"});
        CHECK_FALSE(t.rows.empty());
    }
    CHECK(emit_plotdata(dir.string(), "prop2ii").size() == 2);
    CHECK_THROWS_AS(emit_plotdata(dir.string(), "hologram"), InvalidArgument);

    // A view whose table this run did not produce is header-only.
    const auto empty = emit_plotdata(dir.string(), "prop1");
    REQUIRE(empty.size() == 1);
    CHECK(empty[0].columns == std::vector<std::string>{"n", "U2_terminal", "geometric_fit"});
    CHECK(empty[0].rows.empty());

    // Re-running the same configuration reproduces the records.
    CHECK(run_experiment(cfg).canonical_text() == run_experiment(cfg).canonical_text());
}

TEST_CASE("criticality table columns") {
    const auto out = scratch("criticality");
    const auto cfg = config(R"({"kind": "criticality", "seed": 2, "params": {
        "deltas": [0.25, 4], "simulation": {"T": 2.5e-5, "dt": 2.0e-7, "paths": 50}}})",
                            out);
    std::ostringstream o, e;
    REQUIRE(run(cfg, o, e) == 0);
    const auto t = Table::read((out / cfg.experiment_id() / "tables" / "criticality.csv").string());
    CHECK(t.columns == std::vector<std::string>{"delta", "collapse_fraction", "stderr"});
    CHECK(t.rows.size() == 2);
    CHECK(view_columns("criticality") == t.columns);
}

TEST_CASE("tables and records round trip") {
    Table t;
    t.name = "x";
    t.columns = {"a", "b"};
    t.add({1.5, "label"});
    t.add({-2.0, "with,comma"});
    const auto back = Table::from_csv("x", t.to_csv());
    CHECK(back.columns == t.columns);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[1][1] == "with,comma");
    CHECK(back.rows[0][0].get<double>() == 1.5);
    CHECK_THROWS(back.column("c"));

    ResultRecord r;
    r.experiment_id = "k-0";
    r.metric = "m";
    r.value = 0.25;
    r.std_error = 0.01;
    const auto s = ResultRecord::from_json(r.to_json());
    CHECK(s.value == 0.25);
    CHECK(s.std_error == r.std_error);
}

TEST_CASE("verify suites") {
    CHECK_THROWS_AS(run_verify("bogus"), InvalidArgument);
    CHECK(known_suite("fast"));
    CHECK(known_suite("full"));
    const auto rep = run_verify("fast", 1, 1, {1, 2});
    REQUIRE(rep.criteria.size() == 2);
    for (const auto& c : rep.criteria) {
        CAPTURE(c.line());
        CHECK(c.pass);
        CHECK(c.line().rfind("[PASS]", 0) == 0);
    }
}
