// Command-line front end: sample-runs, analyze, verify, report.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qhpi/qhpi.hpp"

namespace {

void add_common(CLI::App* cmd, qhpi::ExperimentManifest& m, bool& desk) {
    cmd->add_option("--manifest", m.dataset_manifest, "dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--configs", m.configs, "sampled configurations per dataset");
    cmd->add_option("--epochs", m.epochs, "training epochs per fold");
    cmd->add_option("--folds", m.folds, "cross-validation folds");
    cmd->add_option("--seed", m.seed, "master seed");
    cmd->add_option("--out", m.out_dir, "output directory");
    cmd->add_option("--jobs", m.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--max-qubits", m.max_qubits, "skip datasets with more features");
    cmd->add_option("--verify-iterations", m.verify_iterations, "random-search iterations");
    cmd->add_option("--verify-repeats", m.verify_repeats, "random-search repeats");
    cmd->add_flag("--desk-scale", desk, "200 configs, 30 epochs, 5 folds, at most 6 qubits");
    cmd->add_flag("--quiet", m.quiet, "no progress output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperparameter importance workbench for variational quantum classifiers"};
    app.require_subcommand(1);

    qhpi::ExperimentManifest m;
    bool desk = false;
    auto* sample = app.add_subcommand("sample-runs", "train sampled configurations and append to runs.csv");
    auto* analyze = app.add_subcommand("analyze", "quality gate, fANOVA importance and verification search");
    auto* verify = app.add_subcommand("verify", "quality gate and verification search only");
    auto* report = app.add_subcommand("report", "write summary.md from analysis outputs");
    for (auto* cmd : {sample, analyze, verify}) add_common(cmd, m, desk);
    report->add_option("--out", m.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);
    // explicit flags override the preset
    if (desk) {
        qhpi::ExperimentManifest preset = m;
        preset.apply_desk_scale();
        auto* cmd = app.get_subcommands().front();
        if (cmd->count("--configs") == 0) m.configs = preset.configs;
        if (cmd->count("--epochs") == 0) m.epochs = preset.epochs;
        if (cmd->count("--folds") == 0) m.folds = preset.folds;
        if (cmd->count("--max-qubits") == 0) m.max_qubits = preset.max_qubits;
    }

    try {
        if (*sample) {
            const auto s = qhpi::cmd_sample_runs(m);
            for (const auto& [name, why] : s.skipped) std::cout << "skipped " << name << ": " << why << '\n';
            for (const auto& name : s.completed) std::cout << "completed " << name << '\n';
            return s.completed.empty() ? 2 : 0;
        }
        if (*analyze || *verify) {
            const auto r = *analyze ? qhpi::cmd_analyze(m) : qhpi::cmd_verify(m);
            for (const auto& d : r.datasets)
                std::cout << d.dataset << ": R2 " << qhpi::format_double(d.quality.r2)
                          << (d.excluded_reason.empty() ? " kept" : " excluded (" + d.excluded_reason + ")") << '\n';
            if (!r.any_passing) {
                std::cerr << "error: no dataset passed the surrogate quality gate\n";
                return 3;
            }
            return 0;
        }
        if (*report) {
            std::cout << qhpi::cmd_report(m.out_dir);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
