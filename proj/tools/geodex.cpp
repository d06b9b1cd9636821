#include <geodex/presets_data.hpp>
#include <geodex/runner.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw geodex::ConfigError("cannot read config file: " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string preset_text(const std::string& name) {
    for (const auto& [key, text] : geodex::presets())
        if (key == name) return std::string(text);
    throw geodex::ConfigError("unknown preset: " + name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical checks of integral-geometric inequalities for immersions in constant-curvature spaces"};
    app.require_subcommand(1);

    std::string config_path, preset, out_dir = "geodex-out";
    std::uint64_t seed = 0;
    int workers = 1;
    bool quiet = false;
    auto* verify = app.add_subcommand("verify", "run a configuration or preset and write reports");
    auto* source = verify->add_option_group("source");
    source->add_option("--config", config_path, "flat key=value or JSON config file");
    source->add_option("--preset", preset, "name of a built-in preset");
    source->require_option(1);
    auto* seed_opt = verify->add_option("--seed", seed, "override the config seed");
    auto* workers_opt = verify->add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 256));
    verify->add_option("--out", out_dir, "output directory");
    verify->add_flag("--quiet", quiet, "suppress per-theorem progress");

    auto* list = app.add_subcommand("list-presets", "print the built-in preset names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : geodex::exit_config;
    }

    if (list->parsed()) {
        for (const auto& [name, text] : geodex::presets()) std::cout << name << '\n';
        return 0;
    }

    geodex::RunConfig cfg;
    try {
        auto tree = geodex::config::parse_text(preset.empty() ? read_file(config_path) : preset_text(preset));
        if (*seed_opt) tree["seed"] = seed;
        if (*workers_opt) tree["workers"] = workers;
        cfg = geodex::validate_config(tree);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return geodex::exit_config;
    }

    try {
        const auto outcome = geodex::execute(cfg, [&](const std::string& run, const geodex::InequalityReport& r) {
            if (quiet) return;
            std::fprintf(stderr, "%-24s %-16s lhs=%-14.8g rhs=%-14.8g gap/rhs=%+.3e  %s%s%s\n", run.c_str(),
                         r.theorem.c_str(), r.lhs.value, r.rhs.value, r.normalized_gap,
                         geodex::verdict_name(r.verdict).c_str(),
                         r.note.empty() ? "" : "  ", r.note.c_str());
        });
        geodex::write_outputs(outcome, out_dir);
        return outcome.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return geodex::exit_inconclusive;
    }
}
