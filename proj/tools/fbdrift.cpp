#include "fbdrift/common/errors.hpp"
#include "fbdrift/lab/config.hpp"
#include "fbdrift/lab/experiments.hpp"
#include "fbdrift/lab/plotdata.hpp"
#include "fbdrift/lab/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace fbd;

namespace {

struct RunOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
};

int usage_error(const std::string& msg) {
    std::cerr << lab::error_report("usage-error", msg).dump(2) << "\n";
    return 2;
}

int run_kind(const std::string& subcommand, const RunOptions& o) {
    lab::ExperimentConfig cfg;
    try {
        cfg = lab::ExperimentConfig::load(o.config);
    } catch (const Error& e) {
        std::cerr << lab::error_report(e.code(), e.what()).dump(2) << "\n";
        return 2;
    }
    if (subcommand != "run") {
        if (!cfg.kind.empty() && cfg.kind != subcommand)
            return usage_error("config kind '" + cfg.kind + "' does not match subcommand '" + subcommand + "'");
        cfg.kind = subcommand;
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.out_dir = *o.out;
    if (o.workers) cfg.workers = *o.workers;
    return lab::run(cfg, std::cout, std::cerr);
}

void add_run_options(CLI::App* sub, RunOptions& o) {
    sub->add_option("--config", o.config, "experiment config (YAML or JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "overrides the config seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerics laboratory for singular SDE drifts"};
    app.require_subcommand(1);

    RunOptions ro;
    std::vector<std::pair<std::string, CLI::App*>> runs;
    runs.emplace_back("run", app.add_subcommand("run", "run the experiment named by the config's kind"));
    for (const auto& k : lab::ExperimentConfig::kinds())
        runs.emplace_back(k, app.add_subcommand(k, "run a " + k + " experiment"));
    for (auto& [_, sub] : runs) add_run_options(sub, ro);

    std::string suite;
    std::uint64_t vseed = 1;
    int vworkers = 1;
    std::string vout = "out";
    std::vector<int> only;
    auto* verify = app.add_subcommand("verify", "run the acceptance battery");
    verify->add_option("--suite", suite, "fast or full")->required();
    verify->add_option("--seed", vseed, "seed of the stochastic criteria");
    verify->add_option("--workers", vworkers, "worker threads")->check(CLI::PositiveNumber);
    verify->add_option("--out", vout, "output directory");
    verify->add_option("--only", only, "criterion ids")->delimiter(',');

    std::string records, view, pout;
    auto* plot = app.add_subcommand("plotdata", "emit per-figure CSV from stored records");
    plot->add_option("--records", records, "experiment directory or its records.jsonl")->required();
    plot->add_option("--view", view, "view name")->required();
    plot->add_option("--out", pout, "output directory (default <experiment>/plots)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (auto& [name, sub] : runs)
        if (sub->parsed()) return run_kind(name, ro);

    if (verify->parsed()) {
        if (!lab::known_suite(suite)) return usage_error("unknown suite '" + suite + "' (expected fast or full)");
        const auto rep = lab::run_verify(suite, vseed, vworkers, only, &std::cout);
        const std::string dir = (fs::path(vout) / ("verify-" + suite + "-seed" + std::to_string(vseed))).string();
        try {
            rep.records.commit(dir, lab::verify_config(suite, vseed));
            std::ofstream(fs::path(dir) / "report.json") << rep.to_json().dump(2) << "\n";
        } catch (const Error& e) {
            std::cerr << lab::error_report(e.code(), e.what()).dump(2) << "\n";
            return 1;
        }
        std::cout << (rep.all_pass() ? "all criteria passed" : "some criteria failed") << "; records in " << dir
                  << "\n";
        return rep.all_pass() ? 0 : 1;
    }

    if (plot->parsed()) {
        const auto names = lab::plot_views();
        if (std::find(names.begin(), names.end(), view) == names.end()) {
            std::string known;
            for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
            return usage_error("unknown view '" + view + "' (known: " + known + ")");
        }
        try {
            fs::path base(records);
            if (!fs::is_directory(base)) base = base.parent_path();
            const fs::path outdir = pout.empty() ? base / "plots" : fs::path(pout);
            fs::create_directories(outdir);
            for (const auto& t : lab::emit_plotdata(records, view)) {
                const fs::path p = outdir / (t.name + ".csv");
                std::ofstream(p) << t.to_csv();
                std::cout << p.string() << "\n";
            }
        } catch (const Error& e) {
            std::cerr << lab::error_report(e.code(), e.what()).dump(2) << "\n";
            return 1;
        }
        return 0;
    }
    return 0;
}
