#pragma once

// Command-line front end: `fit` runs the collective clustering pipeline on a
// dataset description and writes labels, a JSON report, and an objective
// trace; `sweep` re-runs `fit` across a list of parameter values and emits a
// plot-ready CSV; `synth` materializes a synthetic benchmark dataset.
//
// Exit codes: 0 on success, 1 on runtime/pipeline failures (numeric
// breakdown, unwritable outputs), 2 on usage, config, and input-format
// errors (bad flags, malformed or missing files, shape mismatches).

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmc/error.hpp"
#include "mmc/io.hpp"
#include "mmc/metrics.hpp"
#include "mmc/optimizer.hpp"

namespace mmc {

/// Runs of the randomized-restart labeling protocol behind the reported
/// mean/stddev NMI figures.
inline constexpr int kNmiProtocolRuns = 20;

namespace detail {

/// Options shared by `fit` and `sweep`. `--alpha`/`--beta` broadcast a single
/// scalar over every view weight / mapping weight when given.
struct CommonOptions {
    std::string out_path;
    double alpha = 0.0;
    double beta = 0.0;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* beta_opt = nullptr;
    bool no_row_normalize = false;
    MmcConfig config;

    std::optional<double> alpha_override() const {
        if (alpha_opt != nullptr && alpha_opt->count() > 0) return alpha;
        return std::nullopt;
    }
    std::optional<double> beta_override() const {
        if (beta_opt != nullptr && beta_opt->count() > 0) return beta;
        return std::nullopt;
    }
    MmcConfig effective_config() const {
        MmcConfig c = config;
        c.row_normalize = !no_row_normalize;
        if (const auto a = alpha_override()) c.default_alpha = *a;
        if (const auto b = beta_override()) c.default_beta = *b;
        return c;
    }
};

inline void add_config_flags(CLI::App* cmd, CommonOptions& o) {
    o.alpha_opt =
        cmd->add_option("--alpha", o.alpha, "Set every view weight to this single value");
    o.beta_opt =
        cmd->add_option("--beta", o.beta, "Set every mapping weight to this single value");
    cmd->add_option("--inner-tol", o.config.inner_tol,
                    "Relative objective-change threshold that retires a source from the "
                    "inner sweeps")
        ->capture_default_str();
    cmd->add_option("--outer-tol", o.config.outer_tol,
                    "Largest mapping change that still counts as outer convergence")
        ->capture_default_str();
    cmd->add_option("--max-inner", o.config.max_inner, "Inner sweep cap per outer iteration")
        ->capture_default_str();
    cmd->add_option("--max-outer", o.config.max_outer, "Outer iteration cap")
        ->capture_default_str();
    cmd->add_option("--restarts", o.config.restarts, "k-means restarts per labeling")
        ->capture_default_str();
    cmd->add_option("--seed", o.config.seed, "Seed for every randomized step")
        ->capture_default_str();
    cmd->add_flag("--no-row-normalize", o.no_row_normalize,
                  "Cluster raw embedding rows instead of unit-normalized rows");
}

/// Broadcasts scalar overrides onto an already-loaded problem: `--alpha`
/// replaces every view weight, `--beta` every mapping weight.
inline void apply_overrides(MmcProblem& problem, std::optional<double> alpha,
                            std::optional<double> beta) {
    if (alpha)
        for (SourceProblem& s : problem.sources)
            std::fill(s.view_weights.begin(), s.view_weights.end(), *alpha);
    if (beta)
        for (PairCoupling& p : problem.pairs) p.weight = *beta;
}

inline void require_unique_names(const MmcProblem& problem) {
    std::set<std::string> seen;
    for (const SourceProblem& s : problem.sources)
        if (!seen.insert(s.name).second)
            throw ValidationError("duplicate source name: '" + s.name +
                                  "' (label files would collide)");
}

/// A fit plus the evaluation metrics the report carries. Metrics that need
/// ground truth stay unset when the dataset ships none.
struct FitEvaluation {
    MmcResult result;
    std::vector<std::optional<double>> nmi_best;
    std::vector<std::optional<MeanNmi>> nmi_protocol;
    std::vector<std::optional<MappingAccuracy>> accuracy;
};

inline FitEvaluation evaluate_fit(const MmcProblem& problem,
                                  const std::vector<std::optional<LabelVector>>& truth,
                                  const MmcConfig& config) {
    FitEvaluation ev;
    ev.result = fit(problem, config);
    const std::size_t n_sources = problem.sources.size();
    ev.nmi_best.resize(n_sources);
    ev.nmi_protocol.resize(n_sources);
    for (std::size_t k = 0; k < n_sources; ++k) {
        if (k >= truth.size() || !truth[k].has_value()) continue;
        ev.nmi_best[k] = nmi(ev.result.labels[k], *truth[k]);
        ev.nmi_protocol[k] = mean_nmi_protocol(
            ev.result.consensus[k], static_cast<int>(problem.sources[k].cluster_count),
            *truth[k], kNmiProtocolRuns, config.seed, config.row_normalize);
    }
    ev.accuracy.resize(problem.pairs.size());
    for (std::size_t p = 0; p < problem.pairs.size(); ++p) {
        const MappingState& mapping = ev.result.mappings[p];
        const auto i = static_cast<std::size_t>(mapping.source_i());
        const auto j = static_cast<std::size_t>(mapping.source_j());
        if (i < truth.size() && j < truth.size() && truth[i].has_value() && truth[j].has_value())
            ev.accuracy[p] = mapping_inference_accuracy(mapping, *truth[i], *truth[j]);
    }
    return ev;
}

inline nlohmann::ordered_json build_report(const std::string& dataset_path,
                                           const MmcProblem& problem,
                                           const CommonOptions& opts, const MmcConfig& config,
                                           const FitEvaluation& ev) {
    using json = nlohmann::ordered_json;
    json report;
    report["dataset"] = dataset_path;
    report["seed"] = config.seed;

    json cfg;
    cfg["alpha_override"] =
        opts.alpha_override() ? json(*opts.alpha_override()) : json(nullptr);
    cfg["beta_override"] = opts.beta_override() ? json(*opts.beta_override()) : json(nullptr);
    cfg["inner_tol"] = config.inner_tol;
    cfg["outer_tol"] = config.outer_tol;
    cfg["max_inner"] = config.max_inner;
    cfg["max_outer"] = config.max_outer;
    cfg["restarts"] = config.restarts;
    cfg["row_normalize"] = config.row_normalize;
    cfg["nmi_protocol_runs"] = kNmiProtocolRuns;
    report["config"] = std::move(cfg);

    json sources = json::array();
    for (std::size_t k = 0; k < problem.sources.size(); ++k) {
        const SourceProblem& s = problem.sources[k];
        json row;
        row["name"] = s.name;
        row["instances"] = s.instances();
        row["clusters"] = s.cluster_count;
        row["labels_file"] = s.name + ".labels";
        row["nmi_best"] = ev.nmi_best[k] ? json(*ev.nmi_best[k]) : json(nullptr);
        row["nmi_mean"] = ev.nmi_protocol[k] ? json(ev.nmi_protocol[k]->mean) : json(nullptr);
        row["nmi_std"] = ev.nmi_protocol[k] ? json(ev.nmi_protocol[k]->stddev) : json(nullptr);
        sources.push_back(std::move(row));
    }
    report["sources"] = std::move(sources);

    json pairs = json::array();
    for (std::size_t p = 0; p < problem.pairs.size(); ++p) {
        const MappingState& mapping = ev.result.mappings[p];
        json row;
        row["source_a"] = problem.sources[static_cast<std::size_t>(mapping.source_i())].name;
        row["source_b"] = problem.sources[static_cast<std::size_t>(mapping.source_j())].name;
        row["weight"] = problem.pairs[p].weight;
        row["known_pairs"] = static_cast<std::int64_t>(std::llround(mapping.known().sum()));
        const std::optional<MappingAccuracy>& acc = ev.accuracy[p];
        row["unmapped"] = acc ? json(acc->unmapped) : json(nullptr);
        row["matches"] = acc ? json(acc->matches) : json(nullptr);
        row["inference_accuracy"] = acc ? json(acc->accuracy) : json(nullptr);
        pairs.push_back(std::move(row));
    }
    report["pairs"] = std::move(pairs);

    json iters;
    iters["outer"] = ev.result.outer_iters;
    iters["outer_converged"] = ev.result.outer_converged;
    iters["inner"] = ev.result.inner_iters;
    report["iterations"] = std::move(iters);

    json objective;
    objective["initial"] = ev.result.trace.front().objective;
    objective["final"] = ev.result.trace.back().objective;
    json trace = json::array();
    for (const TraceRow& row : ev.result.trace)
        trace.push_back(json::array({row.outer, row.inner, row.objective}));
    objective["trace"] = std::move(trace);
    report["objective"] = std::move(objective);

    report["mapping_fallback"] = ev.result.mapping_fallback;
    report["wall_time_sec"] = ev.result.wall_time_sec;
    return report;
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<TraceRow>& trace) {
    std::string body = "outer_iter,inner_iter,objective\n";
    for (const TraceRow& row : trace)
        body += std::to_string(row.outer) + "," + std::to_string(row.inner) + "," +
                format_value(row.objective) + "\n";
    write_text(path, body);
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory: " + dir.string());
}

inline int run_fit(const std::string& spec_path, const CommonOptions& opts, std::ostream& out,
                   std::ostream& err) {
    const MmcConfig config = opts.effective_config();
    config.validate();
    const DatasetSpec spec = DatasetSpec::load(spec_path);
    LoadedDataset loaded = load_dataset(spec, config);
    for (const std::string& w : loaded.warnings) err << "warning: " << w << "\n";
    require_unique_names(loaded.problem);
    apply_overrides(loaded.problem, opts.alpha_override(), opts.beta_override());

    const FitEvaluation ev = evaluate_fit(loaded.problem, loaded.truth, config);

    const std::filesystem::path out_dir{opts.out_path};
    ensure_directory(out_dir);
    for (std::size_t k = 0; k < loaded.problem.sources.size(); ++k)
        write_labels(out_dir / (loaded.problem.sources[k].name + ".labels"),
                     ev.result.labels[k]);
    write_trace_csv(out_dir / "trace.csv", ev.result.trace);
    const nlohmann::ordered_json report =
        build_report(spec_path, loaded.problem, opts, config, ev);
    write_text(out_dir / "report.json", report.dump(2) + "\n");

    out << "fit: " << loaded.problem.sources.size() << " source(s), "
        << ev.result.outer_iters << " outer iteration(s)"
        << (ev.result.outer_converged ? ", converged" : ", hit the outer cap") << "\n";
    for (std::size_t k = 0; k < loaded.problem.sources.size(); ++k) {
        out << "  " << loaded.problem.sources[k].name;
        if (ev.nmi_protocol[k])
            out << ": nmi " << ev.nmi_protocol[k]->mean << " +/- "
                << ev.nmi_protocol[k]->stddev;
        out << "\n";
    }
    out << "wrote " << (out_dir / "report.json").string() << "\n";
    return 0;
}

inline int run_synth(const std::string& spec_path, const std::string& out_dir,
                     std::ostream& out) {
    const SynthSpec spec = SynthSpec::load(spec_path);
    const SynthDataset data = generate_synthetic(spec);
    const std::filesystem::path json_path = write_dataset(spec, data, out_dir);
    out << "wrote " << json_path.string() << "\n";
    return 0;
}

/// Rebuilds every mapping from a subsample of its known pairs: a seeded
/// shuffle keeps the first floor(fraction * m) correspondences.
inline void subsample_known_pairs(MmcProblem& problem, const std::vector<LoadedPair>& full,
                                  double fraction, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t p = 0; p < problem.pairs.size(); ++p) {
        std::vector<std::pair<Eigen::Index, Eigen::Index>> pool = full[p].known_pairs;
        std::shuffle(pool.begin(), pool.end(), rng);
        const auto keep = static_cast<std::size_t>(
            std::floor(fraction * static_cast<double>(pool.size())));
        pool.resize(keep);
        std::sort(pool.begin(), pool.end());
        const MappingState& old = problem.pairs[p].mapping;
        problem.pairs[p].mapping = build_mapping(old.rows(), old.cols(), pool,
                                                 old.source_i(), old.source_j());
    }
}

inline int run_sweep(const std::string& spec_path, const std::string& param,
                     const std::vector<double>& values, const CommonOptions& opts,
                     std::ostream& out, std::ostream& err) {
    const MmcConfig base_config = opts.effective_config();
    base_config.validate();
    for (const double v : values) {
        if (!std::isfinite(v)) throw ValidationError("sweep values must be finite");
        if (param == "known_fraction" && (v < 0.0 || v > 1.0))
            throw ValidationError("known_fraction values must lie in [0, 1]");
    }

    const DatasetSpec spec = DatasetSpec::load(spec_path);
    const LoadedDataset loaded = load_dataset(spec, base_config);
    for (const std::string& w : loaded.warnings) err << "warning: " << w << "\n";
    require_unique_names(loaded.problem);

    std::string csv = "value";
    for (const SourceProblem& s : loaded.problem.sources)
        csv += "," + s.name + "_nmi_mean," + s.name + "_nmi_std";
    csv += "\n";

    int exit_code = 0;
    for (std::size_t index = 0; index < values.size(); ++index) {
        const double value = values[index];
        MmcConfig config = base_config;
        config.seed = base_config.seed + index;
        MmcProblem problem = loaded.problem;
        apply_overrides(problem, opts.alpha_override(), opts.beta_override());
        if (param == "alpha")
            apply_overrides(problem, value, std::nullopt);
        else if (param == "beta")
            apply_overrides(problem, std::nullopt, value);
        else
            subsample_known_pairs(problem, loaded.pairs, value, config.seed);

        csv += format_value(value);
        try {
            const FitEvaluation ev = evaluate_fit(problem, loaded.truth, config);
            for (const std::optional<MeanNmi>& m : ev.nmi_protocol) {
                const double mean = m ? m->mean : std::nan("");
                const double stddev = m ? m->stddev : std::nan("");
                csv += "," + format_value(mean) + "," + format_value(stddev);
            }
        } catch (const Error& e) {
            err << "sweep " << param << "=" << format_value(value) << " failed: " << e.what()
                << "\n";
            for (std::size_t k = 0; k < loaded.problem.sources.size(); ++k)
                csv += ",nan,nan";
            exit_code = 1;
        }
        csv += "\n";
    }

    write_text(opts.out_path, csv);
    out << "wrote " << opts.out_path << " (" << values.size() << " value(s))\n";
    return exit_code;
}

}  // namespace detail

/// Entry point shared by the installed binary and in-process tests. `args`
/// excludes the program name. Streams default to the real stdout/stderr.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"Collective spectral clustering across partially mapped sources"};
    app.require_subcommand(1);

    detail::CommonOptions fit_opts;
    fit_opts.out_path = "mmc_out";
    std::string fit_spec;
    CLI::App* fit_cmd = app.add_subcommand(
        "fit", "Cluster a dataset and write labels, report.json, and trace.csv");
    fit_cmd->add_option("spec", fit_spec, "Dataset description JSON")->required();
    fit_cmd->add_option("--out", fit_opts.out_path, "Output directory")
        ->capture_default_str();
    detail::add_config_flags(fit_cmd, fit_opts);

    detail::CommonOptions sweep_opts;
    sweep_opts.out_path = "sweep.csv";
    std::string sweep_spec;
    std::string sweep_param;
    std::vector<double> sweep_values;
    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "Refit across a list of parameter values and write a plot-ready CSV");
    sweep_cmd->add_option("spec", sweep_spec, "Dataset description JSON")->required();
    sweep_cmd->add_option("--param", sweep_param, "Parameter to vary")
        ->required()
        ->check(CLI::IsMember({"alpha", "beta", "known_fraction"}));
    sweep_cmd->add_option("--values", sweep_values, "Comma-separated list of values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--out", sweep_opts.out_path, "Output CSV path")
        ->capture_default_str();
    detail::add_config_flags(sweep_cmd, sweep_opts);

    std::string synth_spec;
    std::string synth_out;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "Generate a synthetic dataset ready for `fit`");
    synth_cmd->add_option("spec", synth_spec, "Generator description JSON")->required();
    synth_cmd->add_option("out_dir", synth_out, "Directory to write the dataset into")
        ->required();

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("mmc");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fit_cmd->parsed()) return detail::run_fit(fit_spec, fit_opts, out, err);
        if (sweep_cmd->parsed())
            return detail::run_sweep(sweep_spec, sweep_param, sweep_values, sweep_opts, out,
                                     err);
        return detail::run_synth(synth_spec, synth_out, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

/// argc/argv adapter for main().
inline int cli_main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args);
}

}  // namespace mmc
