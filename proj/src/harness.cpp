#include "papr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "papr/baselines.hpp"
#include "papr/channel.hpp"

namespace papr {
namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

OperatorMode parse_mode(const std::string& s) {
    if (s == "fast") return OperatorMode::fast;
    if (s == "dense") return OperatorMode::dense;
    throw std::invalid_argument("unknown operator mode '" + s + "'");
}

std::string mode_name(OperatorMode m) { return m == OperatorMode::fast ? "fast" : "dense"; }

SquaredRule parse_squares(const std::string& s) {
    if (s == "structured") return SquaredRule::structured;
    if (s == "scalar") return SquaredRule::scalar;
    throw std::invalid_argument("unknown squared-product rule '" + s + "'");
}

std::string squares_name(SquaredRule r) {
    switch (r) {
    case SquaredRule::structured: return "structured";
    case SquaredRule::scalar: return "scalar";
    case SquaredRule::exact_dense: return "exact_dense";
    }
    return "?";
}

Hyperparams parse_hyper(const json& j) {
    check_keys(j, {"a", "b", "pi", "beta0", "v0", "beta_max", "v_min", "residual_tol", "precision_weighted_kappa",
                   "working_rms"},
               "hyper");
    Hyperparams hp;
    read_opt(j, "a", hp.a);
    read_opt(j, "b", hp.b);
    read_opt(j, "pi", hp.pi);
    read_opt(j, "beta0", hp.beta0);
    read_opt(j, "beta_max", hp.beta_max);
    read_opt(j, "v_min", hp.v_min);
    read_opt(j, "precision_weighted_kappa", hp.precision_weighted_kappa);
    read_opt(j, "working_rms", hp.working_rms);
    if (j.contains("v0")) hp.v0 = j.at("v0").get<double>();
    if (j.contains("residual_tol")) hp.residual_tol = j.at("residual_tol").get<double>();
    return hp;
}

json hyper_json(const Hyperparams& hp) {
    json j{{"a", hp.a},
           {"b", hp.b},
           {"pi", hp.pi},
           {"beta0", hp.beta0},
           {"beta_max", hp.beta_max},
           {"v_min", hp.v_min},
           {"precision_weighted_kappa", hp.precision_weighted_kappa},
           {"working_rms", hp.working_rms}};
    if (hp.v0) j["v0"] = *hp.v0;
    if (hp.residual_tol) j["residual_tol"] = *hp.residual_tol;
    return j;
}

SolverSpec parse_solver(const json& j) {
    check_keys(j, {"name", "kind", "iterations", "lambda", "clip_ratio", "operator", "squares", "max_trials", "hyper"},
               "solver");
    SolverSpec s;
    s.kind = parse_solver_kind(j.at("kind").get<std::string>());
    s.name = j.value("name", to_string(s.kind));
    read_opt(j, "iterations", s.iterations);
    read_opt(j, "lambda", s.lambda);
    read_opt(j, "clip_ratio", s.clip_ratio);
    if (j.contains("operator")) s.mode = parse_mode(j.at("operator").get<std::string>());
    if (j.contains("squares")) s.squares = parse_squares(j.at("squares").get<std::string>());
    if (j.contains("max_trials")) s.max_trials = j.at("max_trials").get<int>();
    if (j.contains("hyper")) s.hyper = parse_hyper(j.at("hyper"));
    return s;
}

double mean_papr_db(const std::vector<double>& papr) {
    double acc = 0.0;
    for (double p : papr) acc += std::pow(10.0, p / 10.0);
    return to_db(acc / static_cast<double>(papr.size()));
}

TracePoint trace_point(int iteration, const Eigen::VectorXd& x, const SymbolFrame& symbols,
                       const FreqChannel& channel, const SystemConfig& sys) {
    const PrecodedFrame w = precoded_from_real(x, sys.antennas, sys.tones);
    TracePoint p{iteration, kDbFloor, mui_ratio(symbols, w, channel, sys), 0.0};
    if (!sys.guard_tones.empty()) p.obr = obr_ratio(w, sys);
    if (x.squaredNorm() > 0.0)
        p.papr_db = mean_papr_db(papr_per_antenna_db(unstack_time_frame(x, sys.antennas, sys.tones), sys.oversample));
    return p;
}

// Operators are built once per (mode, squares) and shared by the solvers of a trial.
class OperatorCache {
public:
    OperatorCache(const FreqChannel& channel, const SystemConfig& config) : channel_(channel), config_(config) {}

    const ConstraintOperator& get(OperatorMode mode, SquaredRule squares) {
        const auto key = std::make_pair(static_cast<int>(mode), mode == OperatorMode::dense ? -1 : static_cast<int>(squares));
        auto it = ops_.find(key);
        if (it == ops_.end()) {
            OperatorOptions opts;
            opts.mode = mode;
            opts.fast_squares = squares;
            it = ops_.emplace(key, ConstraintOperator::build(channel_, config_, opts)).first;
        }
        return it->second;
    }

private:
    const FreqChannel& channel_;
    const SystemConfig& config_;
    std::map<std::pair<int, int>, ConstraintOperator> ops_;
};

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<const SolverSpec*> solvers_that_ran(const ExperimentResult& r) {
    std::vector<const SolverSpec*> out;
    for (std::size_t s = 0; s < r.config.solvers.size(); ++s) {
        for (const auto& t : r.trials) {
            if (!t.error && s < t.outcomes.size() && t.outcomes[s].ran) {
                out.push_back(&r.config.solvers[s]);
                break;
            }
        }
    }
    return out;
}

// Outcomes of one solver over the successful trials that ran it.
std::vector<const SolverOutcome*> outcomes_of(const ExperimentResult& r, const std::string& solver) {
    std::vector<const SolverOutcome*> out;
    for (const auto& t : r.trials) {
        if (t.error) continue;
        for (const auto& o : t.outcomes)
            if (o.solver == solver && o.ran) out.push_back(&o);
    }
    return out;
}

}  // namespace

SolverKind parse_solver_kind(const std::string& name) {
    if (name == "zf") return SolverKind::zf;
    if (name == "clip") return SolverKind::clip;
    if (name == "fitra") return SolverKind::fitra;
    if (name == "emtgm") return SolverKind::emtgm;
    throw std::invalid_argument("unknown solver kind '" + name + "'");
}

std::string to_string(SolverKind kind) {
    switch (kind) {
    case SolverKind::zf: return "zf";
    case SolverKind::clip: return "clip";
    case SolverKind::fitra: return "fitra";
    case SolverKind::emtgm: return "emtgm";
    }
    return "?";
}

int SolverSpec::effective_iterations() const {
    if (iterations > 0) return iterations;
    switch (kind) {
    case SolverKind::fitra: return FitraConfig{}.max_iters;
    case SolverKind::emtgm: return Hyperparams{}.t_max;
    default: return 0;
    }
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    check_keys(j, {"system", "solvers", "trials", "seed", "workers", "ser", "ccdf", "trace_stride", "output"}, "config");
    ExperimentConfig c;

    const json& sys = j.at("system");
    check_keys(sys, {"antennas", "users", "tones", "data_tones", "taps", "alphabet", "oversample"}, "system");
    c.system = SystemConfig::make(sys.at("antennas").get<int>(), sys.at("users").get<int>(), sys.at("tones").get<int>(),
                                  sys.at("data_tones").get<int>(), sys.value("taps", 1),
                                  parse_alphabet(sys.value("alphabet", std::string("16qam"))),
                                  sys.value("oversample", 1));

    const json& solvers = j.at("solvers");
    if (!solvers.is_array()) throw std::invalid_argument("config: solvers must be an array");
    for (const auto& s : solvers) c.solvers.push_back(parse_solver(s));

    read_opt(j, "trials", c.trials);
    read_opt(j, "seed", c.seed);
    read_opt(j, "workers", c.workers);
    read_opt(j, "trace_stride", c.trace_stride);
    if (j.contains("ser")) {
        const json& ser = j.at("ser");
        check_keys(ser, {"snr_db", "noise_draws"}, "ser");
        read_opt(ser, "snr_db", c.snr_db);
        read_opt(ser, "noise_draws", c.noise_draws);
    }
    if (j.contains("ccdf")) {
        const json& cc = j.at("ccdf");
        check_keys(cc, {"min_db", "max_db", "step_db"}, "ccdf");
        read_opt(cc, "min_db", c.ccdf_min_db);
        read_opt(cc, "max_db", c.ccdf_max_db);
        read_opt(cc, "step_db", c.ccdf_step_db);
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        check_keys(o, {"dir", "formats"}, "output");
        if (o.contains("dir")) c.out_dir = o.at("dir").get<std::string>();
        if (o.contains("formats")) {
            c.formats.clear();
            for (const auto& f : o.at("formats")) {
                const auto name = f.get<std::string>();
                if (name == "csv") c.formats.push_back(OutputFormat::csv);
                else if (name == "json") c.formats.push_back(OutputFormat::json);
                else throw std::invalid_argument("unknown output format '" + name + "'");
            }
        }
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    json solvers_j = json::array();
    for (const auto& s : solvers) {
        json sj{{"name", s.name}, {"kind", to_string(s.kind)}};
        if (s.iterative()) sj["iterations"] = s.effective_iterations();
        if (s.kind == SolverKind::fitra) sj["lambda"] = s.lambda;
        if (s.kind == SolverKind::clip) sj["clip_ratio"] = s.clip_ratio;
        if (s.iterative()) {
            sj["operator"] = mode_name(s.mode);
            if (s.mode == OperatorMode::fast) sj["squares"] = squares_name(s.squares);
        }
        if (s.max_trials) sj["max_trials"] = *s.max_trials;
        if (s.kind == SolverKind::emtgm) sj["hyper"] = hyper_json(s.hyper);
        solvers_j.push_back(std::move(sj));
    }
    json formats_j = json::array();
    for (auto f : formats) formats_j.push_back(f == OutputFormat::csv ? "csv" : "json");
    return json{{"system",
                 {{"antennas", system.antennas},
                  {"users", system.users},
                  {"tones", system.tones},
                  {"data_tones", system.data_tones.size()},
                  {"taps", system.taps},
                  {"alphabet", papr::to_string(system.alphabet)},
                  {"oversample", system.oversample}}},
                {"solvers", solvers_j},
                {"trials", trials},
                {"seed", seed},
                {"workers", workers},
                {"ser", {{"snr_db", snr_db}, {"noise_draws", noise_draws}}},
                {"ccdf", {{"min_db", ccdf_min_db}, {"max_db", ccdf_max_db}, {"step_db", ccdf_step_db}}},
                {"trace_stride", trace_stride},
                {"output", {{"dir", out_dir.string()}, {"formats", formats_j}}}};
}

void ExperimentConfig::validate() const {
    system.validate();
    if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if (solvers.empty()) throw std::invalid_argument("config: at least one solver is required");
    if (noise_draws < 1) throw std::invalid_argument("config: noise_draws must be >= 1");
    if (trace_stride < 0) throw std::invalid_argument("config: trace_stride must be >= 0");
    if (!(ccdf_step_db > 0.0) || !(ccdf_max_db >= ccdf_min_db))
        throw std::invalid_argument("config: bad CCDF grid");
    std::set<std::string> names;
    for (const auto& s : solvers) {
        if (s.name.empty()) throw std::invalid_argument("config: solver name must not be empty");
        if (!names.insert(s.name).second) throw std::invalid_argument("config: duplicate solver name '" + s.name + "'");
        if (s.iterations < 0) throw std::invalid_argument("config: " + s.name + ": iterations must be >= 0");
        if (s.max_trials && *s.max_trials < 1) throw std::invalid_argument("config: " + s.name + ": max_trials must be >= 1");
        if (s.kind == SolverKind::clip && !(s.clip_ratio > 0.0))
            throw std::invalid_argument("config: " + s.name + ": clip_ratio must be positive");
        if (s.kind == SolverKind::fitra && !(s.lambda >= 0.0))
            throw std::invalid_argument("config: " + s.name + ": lambda must be nonnegative");
        if (s.kind == SolverKind::emtgm) s.hyper.validate();
    }
}

std::vector<double> ExperimentConfig::ccdf_thresholds() const {
    std::vector<double> out;
    const auto count = static_cast<int>(std::floor((ccdf_max_db - ccdf_min_db) / ccdf_step_db + 1e-9));
    for (int i = 0; i <= count; ++i) out.push_back(ccdf_min_db + i * ccdf_step_db);
    return out;
}

const SolverSpec& ExperimentConfig::solver(const std::string& name) const {
    for (const auto& s : solvers)
        if (s.name == name) return s;
    throw std::invalid_argument("no solver named '" + name + "'");
}

std::uint64_t child_seed(std::uint64_t master, std::uint64_t trial, std::uint64_t stream) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(master) ^ trial) ^ stream);
}

TrialRecord run_trial(const ExperimentConfig& config, int trial) {
    const SystemConfig& sys = config.system;
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = child_seed(config.seed, static_cast<std::uint64_t>(trial), 0);

    Rng rng(rec.seed);
    const FreqChannel channel = freq_response(draw_taps(sys.users, sys.antennas, sys.taps, rng), sys.tones);
    const SymbolFrame symbols = generate_symbols(sys, rng);
    const Eigen::VectorXd y = stack_symbols(sys, symbols);
    OperatorCache ops(channel, sys);

    std::optional<Eigen::VectorXd> x_zf;
    auto zf = [&]() -> const Eigen::VectorXd& {
        if (!x_zf) x_zf = real_from_precoded(zf_precode(channel, sys, symbols));
        return *x_zf;
    };

    for (std::size_t si = 0; si < config.solvers.size(); ++si) {
        const SolverSpec& spec = config.solvers[si];
        SolverOutcome out;
        out.solver = spec.name;
        if (spec.max_trials && trial >= *spec.max_trials) {
            rec.outcomes.push_back(std::move(out));
            continue;
        }
        const int iters = spec.effective_iterations();
        auto observe = [&](int it, const Eigen::VectorXd& x) {
            if (config.trace_stride > 0 && (it % config.trace_stride == 0 || it == iters))
                out.trace.push_back(trace_point(it, x, symbols, channel, sys));
        };
        IterationObserver observer;
        if (config.trace_stride > 0) observer = observe;

        const auto start = std::chrono::steady_clock::now();
        Eigen::VectorXd x;
        switch (spec.kind) {
        case SolverKind::zf:
            x = zf();
            break;
        case SolverKind::clip:
            x = stack_time_frame(clip(unstack_time_frame(zf(), sys.antennas, sys.tones), spec.clip_ratio));
            break;
        case SolverKind::fitra: {
            FitraConfig fc;
            fc.lambda = spec.lambda;
            fc.max_iters = iters;
            FitraResult r = fitra(y, ops.get(spec.mode, spec.squares), fc, observer);
            x = std::move(r.x);
            out.iterations = r.iterations;
            break;
        }
        case SolverKind::emtgm: {
            Hyperparams hp = spec.hyper;
            hp.t_max = iters;
            SolveResult r = solve(y, ops.get(spec.mode, spec.squares), hp, observer);
            out.iterations = r.iterations;
            out.boundary_fraction = boundary_fraction(r.x_hat, r.v);
            x = std::move(r.x_hat);
            break;
        }
        }
        out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        const PrecodedFrame w = precoded_from_real(x, sys.antennas, sys.tones);
        out.ran = true;
        out.energy = x.squaredNorm();
        out.papr_db = papr_per_antenna_db(unstack_time_frame(x, sys.antennas, sys.tones), sys.oversample);
        out.mui = mui_ratio(symbols, w, channel, sys);
        out.obr = sys.guard_tones.empty() ? 0.0 : obr_ratio(w, sys);
        for (std::size_t k = 0; k < config.snr_db.size(); ++k) {
            Rng noise(child_seed(config.seed, static_cast<std::uint64_t>(trial), ((si + 1) << 16) | k));
            out.ser.push_back(ser_simulate(x, symbols, channel, sys, config.snr_db[k], config.noise_draws, noise));
        }
        rec.outcomes.push_back(std::move(out));
    }
    return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressCallback& progress) {
    config.validate();
    ExperimentResult result;
    result.config = config;
    result.trials.resize(static_cast<std::size_t>(config.trials));

    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (int t = next++; t < config.trials; t = next++) {
            try {
                result.trials[t] = run_trial(config, t);
            } catch (const std::exception& e) {
                TrialRecord rec;
                rec.trial = t;
                rec.seed = child_seed(config.seed, static_cast<std::uint64_t>(t), 0);
                rec.error = e.what();
                result.trials[t] = std::move(rec);
            }
            const int d = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(d, config.trials);
            }
        }
    };
    const int n_workers = std::min(config.workers, config.trials);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    }

    for (const auto& t : result.trials)
        if (t.error) throw ExperimentError("trial " + std::to_string(t.trial) + " failed: " + *t.error, result);
    return result;
}

bool ExperimentResult::failed() const {
    return std::any_of(trials.begin(), trials.end(), [](const TrialRecord& t) { return t.error.has_value(); });
}

std::vector<double> ExperimentResult::papr_samples(const std::string& solver) const {
    std::vector<double> out;
    for (const auto* o : outcomes_of(*this, solver)) out.insert(out.end(), o->papr_db.begin(), o->papr_db.end());
    return out;
}

std::vector<double> ExperimentResult::papr_trial_means(const std::string& solver) const {
    std::vector<double> out;
    for (const auto* o : outcomes_of(*this, solver)) out.push_back(mean_papr_db(o->papr_db));
    return out;
}

std::vector<TracePoint> ExperimentResult::mean_trace(const std::string& solver) const {
    struct Acc {
        double papr = 0.0, mui = 0.0, obr = 0.0;
        int n = 0;
    };
    std::map<int, Acc> acc;
    for (const auto* o : outcomes_of(*this, solver)) {
        for (const auto& p : o->trace) {
            auto& a = acc[p.iteration];
            a.papr += std::pow(10.0, p.papr_db / 10.0);
            a.mui += p.mui;
            a.obr += p.obr;
            ++a.n;
        }
    }
    std::vector<TracePoint> out;
    for (const auto& [it, a] : acc)
        out.push_back({it, to_db(a.papr / a.n), a.mui / a.n, a.obr / a.n});
    return out;
}

std::vector<SerResult> ExperimentResult::pooled_ser(const std::string& solver) const {
    std::vector<SerResult> out(config.snr_db.size());
    for (const auto* o : outcomes_of(*this, solver)) {
        for (std::size_t k = 0; k < o->ser.size() && k < out.size(); ++k) {
            out[k].errors += o->ser[k].errors;
            out[k].symbols += o->ser[k].symbols;
        }
    }
    return out;
}

std::vector<SummaryRow> ExperimentResult::summary() const {
    std::vector<SummaryRow> rows;
    for (const auto* spec : solvers_that_ran(*this)) {
        const auto outs = outcomes_of(*this, spec->name);
        SummaryRow row;
        row.solver = spec->name;
        row.trials = static_cast<int>(outs.size());
        const auto samples = papr_samples(spec->name);
        row.mean_papr_db = mean_papr_db(samples);
        row.papr_1pct_db = ccdf_quantile(samples, 0.01);
        double mui = 0.0, obr = 0.0, iters = 0.0, bf = 0.0, wall = 0.0;
        for (const auto* o : outs) {
            mui += o->mui;
            obr += o->obr;
            iters += o->iterations;
            bf += o->boundary_fraction;
            wall += o->wall_seconds;
        }
        const double n = static_cast<double>(outs.size());
        row.mean_mui_db = to_db(mui / n);
        row.mean_obr_db = to_db(obr / n);
        row.mean_iterations = iters / n;
        row.mean_boundary_fraction = bf / n;
        row.mean_wall_s = wall / n;
        rows.push_back(row);
    }
    return rows;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

void write_summary_csv(const ExperimentResult& result, std::ostream& out) {
    out << "solver,trials,mean_papr_db,papr_1pct_db,mean_mui_db,mean_obr_db,mean_iterations,"
           "mean_boundary_fraction,mean_wall_s\n";
    for (const auto& r : result.summary()) {
        out << csv_field(r.solver) << ',' << r.trials << ',' << format_number(r.mean_papr_db) << ','
            << format_number(r.papr_1pct_db) << ',' << format_number(r.mean_mui_db) << ','
            << format_number(r.mean_obr_db) << ',' << format_number(r.mean_iterations) << ','
            << format_number(r.mean_boundary_fraction) << ',' << format_number(r.mean_wall_s) << '\n';
    }
}

void write_ccdf_csv(const ExperimentResult& result, std::ostream& out) {
    const auto thresholds = result.config.ccdf_thresholds();
    const auto specs = solvers_that_ran(result);
    std::vector<std::vector<double>> cols;
    out << "threshold_db";
    for (const auto* s : specs) {
        out << ',' << csv_field(s->name) << ',' << csv_field(s->name + "_avg");
        cols.push_back(ccdf(result.papr_samples(s->name), thresholds));
        cols.push_back(ccdf(result.papr_trial_means(s->name), thresholds));
    }
    out << '\n';
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        out << format_number(thresholds[i]);
        for (const auto& c : cols) out << ',' << format_number(c[i]);
        out << '\n';
    }
}

void write_trace_csv(const ExperimentResult& result, std::ostream& out) {
    out << "solver,iteration,papr_db,mui_db,obr_db\n";
    for (const auto* s : solvers_that_ran(result)) {
        for (const auto& p : result.mean_trace(s->name))
            out << csv_field(s->name) << ',' << p.iteration << ',' << format_number(p.papr_db) << ','
                << format_number(to_db(p.mui)) << ',' << format_number(to_db(p.obr)) << '\n';
    }
}

void write_ser_csv(const ExperimentResult& result, std::ostream& out) {
    const auto specs = solvers_that_ran(result);
    std::vector<std::vector<SerResult>> cols;
    out << "snr_db";
    for (const auto* s : specs) {
        out << ',' << csv_field(s->name);
        cols.push_back(result.pooled_ser(s->name));
    }
    out << '\n';
    for (std::size_t k = 0; k < result.config.snr_db.size(); ++k) {
        out << format_number(result.config.snr_db[k]);
        for (const auto& c : cols) out << ',' << format_number(c[k].rate());
        out << '\n';
    }
}

void write_trials_csv(const ExperimentResult& result, std::ostream& out) {
    out << "trial,seed,solver,ran,mean_papr_db,mui_db,obr_db,iterations,boundary_fraction,energy,error,wall_s\n";
    for (const auto& t : result.trials) {
        if (t.error) {
            out << t.trial << ',' << t.seed << ",,0,,,,,,," << csv_field(*t.error) << ",\n";
            continue;
        }
        for (const auto& o : t.outcomes) {
            out << t.trial << ',' << t.seed << ',' << csv_field(o.solver) << ',' << (o.ran ? 1 : 0) << ',';
            if (o.ran)
                out << format_number(mean_papr_db(o.papr_db)) << ',' << format_number(to_db(o.mui)) << ','
                    << format_number(to_db(o.obr)) << ',' << o.iterations << ','
                    << format_number(o.boundary_fraction) << ',' << format_number(o.energy) << ",,"
                    << format_number(o.wall_seconds) << '\n';
            else
                out << ",,,,,,,\n";
        }
    }
}

json results_json(const ExperimentResult& result) {
    json summary = json::array();
    for (const auto& r : result.summary())
        summary.push_back({{"solver", r.solver},
                           {"trials", r.trials},
                           {"mean_papr_db", r.mean_papr_db},
                           {"papr_1pct_db", r.papr_1pct_db},
                           {"mean_mui_db", r.mean_mui_db},
                           {"mean_obr_db", r.mean_obr_db},
                           {"mean_iterations", r.mean_iterations},
                           {"mean_boundary_fraction", r.mean_boundary_fraction},
                           {"mean_wall_s", r.mean_wall_s}});
    json traces = json::object();
    json ser = json::object();
    for (const auto* s : solvers_that_ran(result)) {
        json tr = json::array();
        for (const auto& p : result.mean_trace(s->name))
            tr.push_back({{"iteration", p.iteration}, {"papr_db", p.papr_db}, {"mui_db", to_db(p.mui)}, {"obr_db", to_db(p.obr)}});
        traces[s->name] = std::move(tr);
        json sr = json::array();
        for (const auto& r : result.pooled_ser(s->name))
            sr.push_back({{"errors", r.errors}, {"symbols", r.symbols}, {"ser", r.rate()}});
        ser[s->name] = std::move(sr);
    }
    json trials = json::array();
    for (const auto& t : result.trials) {
        json tj{{"trial", t.trial}, {"seed", t.seed}};
        if (t.error) tj["error"] = *t.error;
        json outs = json::array();
        for (const auto& o : t.outcomes) {
            json oj{{"solver", o.solver}, {"ran", o.ran}};
            if (o.ran) {
                oj["papr_db"] = o.papr_db;
                oj["mui_db"] = to_db(o.mui);
                oj["obr_db"] = to_db(o.obr);
                oj["iterations"] = o.iterations;
                oj["boundary_fraction"] = o.boundary_fraction;
                oj["energy"] = o.energy;
                oj["wall_s"] = o.wall_seconds;
            }
            outs.push_back(std::move(oj));
        }
        tj["outcomes"] = std::move(outs);
        trials.push_back(std::move(tj));
    }
    return json{{"config", result.config.to_json()},
                {"summary", summary},
                {"trace", traces},
                {"snr_db", result.config.snr_db},
                {"ser", ser},
                {"trials", trials}};
}

std::vector<std::filesystem::path> emit_results(const ExperimentResult& result, const std::filesystem::path& dir) {
    if (result.trials.empty()) throw std::invalid_argument("emit_results: no trials");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    auto write = [&](const std::string& name, const auto& fn) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        fn(out);
        if (!out) throw std::runtime_error("write failed for " + path.string());
        written.push_back(path);
    };
    const auto& fmts = result.config.formats;
    const bool any_ran = !solvers_that_ran(result).empty();
    if (std::find(fmts.begin(), fmts.end(), OutputFormat::csv) != fmts.end()) {
        if (any_ran) {
            write("summary.csv", [&](std::ostream& o) { write_summary_csv(result, o); });
            write("ccdf.csv", [&](std::ostream& o) { write_ccdf_csv(result, o); });
            if (result.config.trace_stride > 0) write("trace.csv", [&](std::ostream& o) { write_trace_csv(result, o); });
            if (!result.config.snr_db.empty()) write("ser.csv", [&](std::ostream& o) { write_ser_csv(result, o); });
        }
        write("trials.csv", [&](std::ostream& o) { write_trials_csv(result, o); });
    }
    if (std::find(fmts.begin(), fmts.end(), OutputFormat::json) != fmts.end())
        write("results.json", [&](std::ostream& o) { o << results_json(result).dump(2) << '\n'; });
    return written;
}

std::filesystem::path resolve_out_dir(const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("PAPR_OUT_DIR"); env && *env) return env;
    return fallback;
}

std::vector<SweepRow> sweep_antennas(const ExperimentConfig& config, const std::vector<int>& antennas,
                                     const ProgressCallback& progress) {
    if (antennas.empty()) throw std::invalid_argument("sweep_antennas: no antenna counts");
    std::vector<SweepRow> rows;
    int step = 0;
    for (int m : antennas) {
        ExperimentConfig c = config;
        const SystemConfig& s = config.system;
        c.system = SystemConfig::make(m, s.users, s.tones, static_cast<int>(s.data_tones.size()), s.taps, s.alphabet,
                                      s.oversample);
        c.snr_db.clear();
        c.trace_stride = 0;
        const ExperimentResult r = run_experiment(c);
        for (const auto& row : r.summary()) rows.push_back({m, row});
        if (progress) progress(++step, static_cast<int>(antennas.size()));
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "antennas,solver,trials,mean_papr_db,papr_1pct_db,mean_mui_db,mean_obr_db,mean_wall_s\n";
    for (const auto& r : rows)
        out << r.antennas << ',' << csv_field(r.summary.solver) << ',' << r.summary.trials << ','
            << format_number(r.summary.mean_papr_db) << ',' << format_number(r.summary.papr_1pct_db) << ','
            << format_number(r.summary.mean_mui_db) << ',' << format_number(r.summary.mean_obr_db) << ','
            << format_number(r.summary.mean_wall_s) << '\n';
}

}  // namespace papr
