#include "matstein/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

int env_threads() {
    const char* v = std::getenv("MATSTEIN_THREADS");
    if (!v) return 1;
    const int t = std::atoi(v);
    return t >= 1 ? t : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matstein: matrix-normal Stein framework experiment driver"};
    app.set_version_flag("--version", MATSTEIN_VERSION);
    app.require_subcommand(1);

    const std::vector<std::string> experiments = {
        "sample",        "verify_stein", "solve_stein",   "ou_simulate",
        "verify_moments", "estimate",    "clt_experiment", "t_experiment"};

    std::string config_path, output_path, artifact_path;
    int threads = env_threads();

    std::vector<CLI::App*> subs;
    for (const std::string& name : experiments) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--output", output_path, "artifact path (overrides config 'output')");
        sub->add_option("--threads", threads, "worker cap (default MATSTEIN_THREADS or 1)");
        subs.push_back(sub);
    }
    CLI::App* verify = app.add_subcommand("verify", "check an artifact's embedded config hash");
    verify->add_option("--config", config_path, "config the artifact was produced from")->required();
    verify->add_option("--artifact", artifact_path, "artifact to verify")->required();

    CLI11_PARSE(app, argc, argv);

    if (verify->parsed())
        return matstein::verify_artifact_file(config_path, artifact_path, std::cerr);

    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        // The config names the experiment too; the subcommand must agree.
        std::ifstream in(config_path);
        if (in.good()) {
            try {
                matstein::Json cfg = matstein::Json::parse(in);
                if (cfg.contains("experiment") &&
                    cfg.at("experiment").get<std::string>() != experiments[i]) {
                    std::cerr << "validation error: config experiment '"
                              << cfg.at("experiment").get<std::string>()
                              << "' does not match subcommand '" << experiments[i] << "'\n";
                    return 1;
                }
            } catch (...) {
                // run_experiment_file reports the parse error properly
            }
        }
        return matstein::run_experiment_file(config_path, output_path, threads, std::cerr);
    }
    return 1;
}
