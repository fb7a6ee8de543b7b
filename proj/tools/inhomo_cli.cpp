// inhomo: experiment driver. One subcommand per experiment, one JSON config each.

#include <inhomo/commands.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"inhomogeneous approximation on planar curves: experiment driver"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    int workers = 0;
    std::uint64_t budget = 0;
    for (const auto& [name, fn] : inhomo::cli::commands()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("-c,--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out", out_dir, "output directory (overrides INHOMO_OUT_DIR and output.dir)");
        sub->add_option("-w,--workers", workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
        sub->add_option("-b,--budget", budget, "form budget (overrides the config)")->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : inhomo::cli::exit_usage;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    try {
        auto cfg = inhomo::load_config(config_path);
        if (workers > 0) cfg.workers = workers;
        if (budget > 0) cfg.budget = budget;
        inhomo::cli::RunOptions run;
        run.out_dir = inhomo::cli::resolve_out_dir(cfg, out_dir);
        run.workers = cfg.workers;
        const auto res = inhomo::cli::commands().at(name)(cfg, run);
        std::cout << inhomo::io::dump17(res.summary) << '\n';
        for (const auto& f : res.files) std::cerr << "wrote " << f.string() << '\n';
        return res.exit_code;
    } catch (const inhomo::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return inhomo::cli::exit_usage;
    } catch (const inhomo::budget_error& e) {
        std::cerr << "budget exhausted: " << e.what() << '\n';
        return inhomo::cli::exit_budget;
    } catch (const inhomo::invalid_input& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return inhomo::cli::exit_usage;
    } catch (const inhomo::domain_error& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return inhomo::cli::exit_usage;
    }
}
