#include <z2forge/cli.hpp>

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

namespace cli = z2forge::cli;

int main(int argc, char** argv) {
    CLI::App app{"z2forge: Z2 lattice gauge theory experiments on trapped ions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cli::tool_version);

    auto* run = app.add_subcommand("run", "run a scenario and write <scenario>.csv and <scenario>.meta.json");
    std::string scenario, config, out;
    std::vector<std::string> sets;
    int workers = 0;
    bool full_scale = false, quiet = false;
    run->add_option("--scenario", scenario, "scenario name (see `list`)");
    run->add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
    run->add_option("--set", sets, "override one parameter, key=value")->take_all();
    run->add_option("--out", out, "output directory");
    run->add_option("--workers", workers, "sweep worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    run->add_flag("--full-scale", full_scale, "use the long-running full-size defaults where available");
    run->add_flag("-q,--quiet", quiet, "no summary on stdout");

    auto* list = app.add_subcommand("list", "print the scenario catalog");

    auto* val = app.add_subcommand("validate", "check a config against the parametric-regime conditions");
    std::string vconfig, vscenario;
    std::vector<std::string> vsets;
    val->add_option("--config", vconfig, "key = value config file")->check(CLI::ExistingFile);
    val->add_option("--scenario", vscenario, "scenario name, if not in the file");
    val->add_option("--set", vsets, "override one parameter, key=value")->take_all();
    val->add_flag("--full-scale", full_scale, "validate the full-size defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (*list) {
        for (const auto& s : cli::catalog())
            std::cout << std::left << std::setw(30) << s.name << std::setw(16) << s.figure << s.summary << "\n";
        return 0;
    }

    auto load = [](const std::string& file, const std::string& name, const std::vector<std::string>& kv) {
        cli::ScenarioConfig c;
        if (!file.empty()) c = cli::load_config(file);
        if (!name.empty()) c.scenario = name;
        for (auto& s : kv) cli::apply_set(c, s);
        return c;
    };

    if (*val) {
        return cli::guarded([&] {
            const auto c = load(vconfig, vscenario, vsets);
            const auto w = cli::validate(c, full_scale);
            for (auto& m : w) std::cout << "warning: " << m << "\n";
            if (w.empty()) std::cout << "ok\n";
            return 0;
        });
    }

    return cli::guarded([&] {
        auto c = load(config, scenario, sets);
        if (!out.empty()) c.out_dir = out;
        const auto r = cli::resolve(c, full_scale);
        cli::RunOptions opt;
        opt.workers = workers;
        opt.full_scale = full_scale;
        const auto res = cli::run(r, opt);
        cli::write_outputs(r, res, c.out_dir);
        if (!quiet) {
            std::cout << r.scenario->name << ": " << res.table.rows.size() << " rows -> " << c.out_dir << "/"
                      << r.scenario->name << ".csv (hash " << res.hash << ")\n";
            for (auto& [k, v] : res.table.notes) std::cout << "  " << k << " = " << cli::format_number(v) << "\n";
        }
        return 0;
    });
}
