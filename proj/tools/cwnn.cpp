#include "app.hpp"

#include "CLI11.hpp"
#include "cwnn/error.hpp"

#include <iostream>

namespace {

struct Common {
    std::optional<std::string> preset;
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<long long> seed;
    std::vector<std::string> sets;
    std::vector<std::pair<std::string, std::string>> shortcuts;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--preset", c.preset, "Named preset (see `cwnn presets`)");
    cmd->add_option("--config", c.config, "JSON config file layered over the preset")->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "Run directory (default $CWNN_OUTPUT_ROOT/<command>-<preset>)");
    cmd->add_option("--seed", c.seed, "Master seed");
    cmd->add_option("--set", c.sets, "Override a field, e.g. --set growth.epsilon=0.01")->take_all();
}

// Shorthand flags that map straight onto config fields.
void add_shortcut(CLI::App* cmd, Common& c, const std::string& flag, const std::string& path,
                  const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&c, path](const std::string& v) { c.shortcuts.emplace_back(path, v); }, help);
}

int execute(const std::string& command, const Common& c) {
    std::vector<std::pair<std::string, std::string>> overrides;
    if (c.seed)
        overrides.emplace_back("seed", std::to_string(*c.seed));
    overrides.insert(overrides.end(), c.shortcuts.begin(), c.shortcuts.end());
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "configuration error: --set expects key=value, got '" << s << "'\n";
            return cwnn::app::ConfigFailure;
        }
        overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    nlohmann::json cfg;
    try {
        std::optional<std::filesystem::path> file;
        if (c.config)
            file = *c.config;
        cfg = cwnn::app::resolve(c.preset, file, overrides);
    } catch (const cwnn::Error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return cwnn::app::ConfigFailure;
    }
    const std::filesystem::path dir =
        c.out ? std::filesystem::path(*c.out)
              : cwnn::app::default_output_root() / (command + "-" + cfg["preset"].get<std::string>());
    const auto o = cwnn::app::run(command, cfg, dir, std::cout, std::cerr);
    std::cout << "run directory: " << dir.string() << '\n';
    return o.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constructive wavelet neural networks: fit, online learning and frame diagnostics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "cwnn 1.0.0");

    Common estimate, fit, online, diag, sweep;

    auto* e = app.add_subcommand("estimate-freq", "Estimate the initial resolution from subspace energies");
    add_common(e, estimate);
    add_shortcut(e, estimate, "--kappa", "estimator.kappa", "Fraction of start-grid centers probed");
    add_shortcut(e, estimate, "--updates", "estimator.updates", "Gradient steps per probe");

    auto* f = app.add_subcommand("fit", "Grow and train a network until the target loss");
    add_common(f, fit);
    add_shortcut(f, fit, "--epsilon", "growth.epsilon", "Target loss");
    add_shortcut(f, fit, "--mu", "growth.mu", "Fraction of each resolution that is expanded");
    add_shortcut(f, fit, "--m-init", "growth.m_init", "Initial resolution, or auto");
    add_shortcut(f, fit, "--baseline", "baseline", "none, or wnn for the fixed-grid baseline");

    auto* o = app.add_subcommand("online", "Online learning on a streamed series");
    add_common(o, online);
    add_shortcut(o, online, "--epsilon", "growth.epsilon", "Target loss");
    add_shortcut(o, online, "--window", "online.window", "Samples per data-collection cycle");

    auto* d = app.add_subcommand("diag", "Coefficient decay outside a time-frequency box and energy unimodality");
    add_common(d, diag);
    add_shortcut(d, diag, "--threads", "diag.threads", "Worker threads for the coefficient scan");

    auto* s = app.add_subcommand("sweep", "Repeat a command over a list of parameter values");
    add_common(s, sweep);
    add_shortcut(s, sweep, "--param", "sweep.param", "mu, epsilon or seed");
    add_shortcut(s, sweep, "--values", "sweep.values", "JSON array, e.g. '[\"1/2\",\"1/3\"]'");
    add_shortcut(s, sweep, "--threads", "sweep.threads", "Runs in parallel");

    auto* p = app.add_subcommand("presets", "List presets, or print one resolved config");
    std::optional<std::string> show;
    p->add_option("name", show, "Preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : cwnn::app::ConfigFailure;
    }

    if (p->parsed()) {
        if (!show) {
            for (const auto& n : cwnn::app::preset_names())
                std::cout << n << '\n';
            return 0;
        }
        try {
            std::cout << cwnn::app::preset(*show).dump(2) << '\n';
        } catch (const cwnn::Error& err) {
            std::cerr << "configuration error: " << err.what() << '\n';
            return cwnn::app::ConfigFailure;
        }
        return 0;
    }
    if (e->parsed())
        return execute("estimate-freq", estimate);
    if (f->parsed())
        return execute("fit", fit);
    if (o->parsed())
        return execute("online", online);
    if (d->parsed())
        return execute("diag", diag);
    return execute("sweep", sweep);
}
