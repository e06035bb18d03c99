// papr-sim: Monte-Carlo driver for the precoding experiments.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "papr/harness.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

void print_summary(const papr::ExperimentResult& r) {
    for (const auto& row : r.summary())
        std::cerr << "  " << row.solver << ": trials " << row.trials << ", PAPR " << papr::format_number(row.mean_papr_db)
                  << " dB (1%: " << papr::format_number(row.papr_1pct_db) << "), MUI "
                  << papr::format_number(row.mean_mui_db) << " dB, OBR " << papr::format_number(row.mean_obr_db)
                  << " dB\n";
}

void report_progress(int done, int total) {
    std::cerr << "\r  " << done << "/" << total << std::flush;
    if (done == total) std::cerr << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PAPR-aware precoding simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<int> trials, workers;
    std::optional<std::uint64_t> seed;
    std::string solvers, out_dir;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "run a Monte-Carlo experiment");
    run->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--trials", trials, "override the trial count");
    run->add_option("--solvers", solvers, "comma-separated subset of the configured solver names");
    run->add_option("--out", out_dir, "output directory (PAPR_OUT_DIR takes precedence)");
    run->add_option("--workers", workers, "worker threads");
    run->add_option("--seed", seed, "master seed");
    run->add_flag("--quiet", quiet, "no progress output");

    std::string m_values;
    auto* sweep = app.add_subcommand("sweep-antennas", "repeat the experiment over antenna counts");
    sweep->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("--m-values", m_values, "comma-separated antenna counts")->required();
    sweep->add_option("--trials", trials, "override the trial count");
    sweep->add_option("--solvers", solvers, "comma-separated subset of the configured solver names");
    sweep->add_option("--out", out_dir, "output directory (PAPR_OUT_DIR takes precedence)");
    sweep->add_option("--workers", workers, "worker threads");
    sweep->add_option("--seed", seed, "master seed");
    sweep->add_flag("--quiet", quiet, "no progress output");

    CLI11_PARSE(app, argc, argv);

    try {
        papr::ExperimentConfig cfg = papr::ExperimentConfig::load(config_path);
        if (trials) cfg.trials = *trials;
        if (workers) cfg.workers = *workers;
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        cfg.out_dir = papr::resolve_out_dir(cfg.out_dir);
        if (!solvers.empty()) {
            std::vector<papr::SolverSpec> picked;
            for (const auto& name : split_list(solvers)) picked.push_back(cfg.solver(name));
            cfg.solvers = std::move(picked);
        }
        cfg.validate();
        const papr::ProgressCallback progress = quiet ? papr::ProgressCallback{} : report_progress;

        if (*run) {
            papr::ExperimentResult result;
            int status = 0;
            try {
                result = papr::run_experiment(cfg, progress);
            } catch (const papr::ExperimentError& e) {
                std::cerr << "papr-sim: " << e.what() << '\n';
                result = e.partial();
                status = 2;
            }
            for (const auto& p : papr::emit_results(result, cfg.out_dir)) std::cout << p.string() << '\n';
            if (!quiet) print_summary(result);
            return status;
        }

        std::vector<int> ms;
        for (const auto& s : split_list(m_values)) ms.push_back(std::stoi(s));
        const auto rows = papr::sweep_antennas(cfg, ms, progress);
        std::filesystem::create_directories(cfg.out_dir);
        const auto path = cfg.out_dir / "sweep.csv";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        papr::write_sweep_csv(rows, out);
        std::cout << path.string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "papr-sim: " << e.what() << '\n';
        return 1;
    }
}
