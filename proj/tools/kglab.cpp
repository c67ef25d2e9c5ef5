// kglab <subcommand> --config <path> [--seed <u64>] [--out <dir>]
// Exit status: 0 pass, 2 verdict failure, 1 error.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "kglab/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Klein-Gordon numerical laboratory"};
    app.set_version_flag("--version", kglab::kglab_version());
    app.require_subcommand(1);

    struct Options {
        std::string config;
        std::string out;
        bool print_config = false;
    };
    Options opt;
    std::uint64_t seed_in = 0;
    for (auto kind : kglab::all_kinds()) {
        auto* sub = app.add_subcommand(kglab::kind_name(kind), std::string("run a ") + kglab::kind_name(kind) +
                                                                   " experiment");
        sub->add_option("--config", opt.config, "experiment config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed_in, "override experiment.seed");
        sub->add_option("--out", opt.out, "output directory (default kglab-out/<subcommand>)");
        sub->add_flag("--print-config", opt.print_config, "print the documented defaults and exit");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    auto* sub = app.get_subcommands().front();
    auto kind = kglab::parse_kind(sub->get_name());
    if (opt.print_config) {
        std::cout << kglab::default_config_text(kind);
        return 0;
    }
    if (opt.config.empty()) {
        std::cerr << "error: --config is required\n";
        return 1;
    }
    try {
        auto cfg = kglab::Config::load(opt.config);
        if (sub->count("--seed")) cfg.set("experiment.seed", std::to_string(seed_in));
        auto ec = kglab::ExperimentConfig::from_config(kind, cfg);
        std::string out = opt.out.empty() ? std::string("kglab-out/") + kglab::kind_name(kind) : opt.out;
        auto man = kglab::run_experiment(ec, out);
        std::printf("%s: %s  outputs=%zu  output_hash=%s  manifest=%s/manifest.json\n", man.kind.c_str(),
                    man.pass ? "PASS" : "FAIL", man.outputs.size(), kglab::hex64(man.output_hash()).c_str(),
                    out.c_str());
        for (const auto& f : man.failures) std::printf("  %s\n", f.c_str());
        return man.pass ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
