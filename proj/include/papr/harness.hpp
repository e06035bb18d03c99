#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "papr/emtgm.hpp"
#include "papr/linops.hpp"
#include "papr/metrics.hpp"
#include "papr/model.hpp"

namespace papr {

enum class SolverKind { zf, clip, fitra, emtgm };

SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

struct SolverSpec {
    std::string name;
    SolverKind kind = SolverKind::zf;
    int iterations = 0;      // fitra / emtgm; 0 picks the kind's default
    double lambda = 0.25;    // fitra
    double clip_ratio = 1.5; // clip
    OperatorMode mode = OperatorMode::fast;
    SquaredRule squares = SquaredRule::structured;  // fast mode only
    /// Run this solver only on trials [0, max_trials) when set.
    std::optional<int> max_trials;
    Hyperparams hyper;       // emtgm; t_max is taken from `iterations`

    int effective_iterations() const;
    bool iterative() const { return kind == SolverKind::fitra || kind == SolverKind::emtgm; }
};

enum class OutputFormat { csv, json };

struct ExperimentConfig {
    SystemConfig system;
    std::vector<SolverSpec> solvers;
    int trials = 1;
    std::uint64_t seed = 1;
    int workers = 1;
    /// SER sweep; empty disables it.
    std::vector<double> snr_db;
    int noise_draws = 1;
    /// CCDF threshold grid in dB.
    double ccdf_min_db = 0.0;
    double ccdf_max_db = 14.0;
    double ccdf_step_db = 0.05;
    /// Record traces every `trace_stride` iterations (and at the last one); 0 disables.
    int trace_stride = 10;
    std::filesystem::path out_dir = "results";
    std::vector<OutputFormat> formats{OutputFormat::csv, OutputFormat::json};

    /// Throws std::invalid_argument on an unknown key or a broken invariant.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    void validate() const;
    std::vector<double> ccdf_thresholds() const;
    const SolverSpec& solver(const std::string& name) const;
};

/// splitmix64 finalizer over (master, trial, stream): independent, extendable child seeds.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t trial, std::uint64_t stream);

struct TracePoint {
    int iteration;
    double papr_db;  // antenna average, linear domain
    double mui;      // linear ratios
    double obr;
};

struct SolverOutcome {
    std::string solver;
    bool ran = false;
    std::vector<double> papr_db;  // per antenna
    double mui = 0.0;             // linear ratios
    double obr = 0.0;
    int iterations = 0;
    double boundary_fraction = 0.0;  // emtgm only
    double energy = 0.0;             // ||x||^2
    double wall_seconds = 0.0;
    std::vector<TracePoint> trace;
    std::vector<SerResult> ser;      // one per SNR point
};

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<SolverOutcome> outcomes;  // config solver order
    std::optional<std::string> error;
};

struct SummaryRow {
    std::string solver;
    int trials = 0;
    double mean_papr_db = 0.0;
    double papr_1pct_db = 0.0;  // per-antenna PAPR exceeded with probability 1%
    double mean_mui_db = 0.0;
    double mean_obr_db = 0.0;
    double mean_iterations = 0.0;
    double mean_boundary_fraction = 0.0;
    double mean_wall_s = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<TrialRecord> trials;  // trial-index order

    bool failed() const;
    std::vector<SummaryRow> summary() const;
    /// Per-antenna samples of a solver, pooled over trials.
    std::vector<double> papr_samples(const std::string& solver) const;
    /// Antenna-averaged PAPR per trial.
    std::vector<double> papr_trial_means(const std::string& solver) const;
    /// Trace averaged over trials, linear domain, reported in dB.
    std::vector<TracePoint> mean_trace(const std::string& solver) const;
    /// Errors / symbols pooled over trials, one per SNR point.
    std::vector<SerResult> pooled_ser(const std::string& solver) const;
};

/// Raised after all trials have run when any of them failed; carries the partial results.
class ExperimentError : public std::runtime_error {
public:
    ExperimentError(const std::string& what, ExperimentResult partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const ExperimentResult& partial() const { return partial_; }

private:
    ExperimentResult partial_;
};

using ProgressCallback = std::function<void(int done, int total)>;

/// Runs every trial on a pool of config.workers threads. Output is independent of the worker count.
ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressCallback& progress = {});

/// Runs one trial on the calling thread.
TrialRecord run_trial(const ExperimentConfig& config, int trial);

/// Table writers. Column order is fixed; wall-time columns end in "_s".
void write_summary_csv(const ExperimentResult& result, std::ostream& out);
void write_ccdf_csv(const ExperimentResult& result, std::ostream& out);
void write_trace_csv(const ExperimentResult& result, std::ostream& out);
void write_ser_csv(const ExperimentResult& result, std::ostream& out);
void write_trials_csv(const ExperimentResult& result, std::ostream& out);
nlohmann::json results_json(const ExperimentResult& result);

/// Writes the configured formats into `dir` (created if missing) and returns the written paths.
std::vector<std::filesystem::path> emit_results(const ExperimentResult& result, const std::filesystem::path& dir);

/// The output directory: PAPR_OUT_DIR when set, otherwise `fallback`.
std::filesystem::path resolve_out_dir(const std::filesystem::path& fallback);

struct SweepRow {
    int antennas;
    SummaryRow summary;
};

/// Re-runs the experiment for each antenna count; everything else is kept.
std::vector<SweepRow> sweep_antennas(const ExperimentConfig& config, const std::vector<int>& antennas,
                                     const ProgressCallback& progress = {});
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

/// Formatting shared by every table: "%.10g", so equal doubles give equal bytes.
std::string format_number(double value);

}  // namespace papr
