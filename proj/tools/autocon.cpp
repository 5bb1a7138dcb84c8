// Command-line front end: train, eval, autocorr, synth, repr-sim, gradcheck.

#include "autocon/autocorr.hpp"
#include "autocon/config.hpp"
#include "autocon/errors.hpp"
#include "autocon/io.hpp"
#include "autocon/trainer.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

namespace {

using namespace autocon;

/// Collects `--key value` overrides for every RunConfig key.
struct ConfigFlags {
    std::string config_file;
    std::map<std::string, std::vector<std::string>> raw;

    void attach(CLI::App& app) {
        app.add_option("--config", config_file, "flat key = value config file");
        for (const auto& key : config_keys()) {
            std::string names = "--" + key;
            std::string dashed = key;
            std::replace(dashed.begin(), dashed.end(), '_', '-');
            if (dashed != key) names += ",--" + dashed;
            app.add_option(names, raw[key], "config key '" + key + "'")->expected(0, 1)->allow_extra_args(false);
        }
    }

    [[nodiscard]] RunConfig resolve(RunConfig base = {}) const {
        if (!config_file.empty()) base = load_config(config_file, base);
        for (const auto& [key, values] : raw) {
            if (values.empty()) continue;
            apply_setting(base, key, values.back());
        }
        return base;
    }

    /// Flags given without a value act as booleans set to 1.
    void normalize(CLI::App& app) {
        for (auto& [key, values] : raw) {
            const auto* opt = app.get_option("--" + key);
            if (opt->count() > 0 && values.empty()) values.push_back("1");
        }
    }
};

void emit(const std::string& out, const std::string& content) {
    if (out.empty() || out == "-") {
        std::cout << content;
    } else {
        write_text_atomic(out, content);
    }
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

int fail(const char* kind, const std::string& message, int code) {
    std::cerr << "error: " << kind << ": " << one_line(message) << '\n';
    return code;
}

/// Loads a checkpoint and the run data described by its echoed config plus overrides.
struct Loaded {
    Checkpoint checkpoint;
    RunConfig config;
    RunData data;
};

Loaded load_for_checkpoint(const std::string& path, const ConfigFlags& flags) {
    Loaded out;
    out.checkpoint = load_checkpoint(path);
    out.config = flags.resolve(config_from_echo(out.checkpoint.config));
    out.data = load_run_data(out.config);
    check_compatible(out.checkpoint.params.config, out.data);
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"AutoCon forecaster: training, evaluation and diagnostics"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");

    ConfigFlags train_flags, eval_flags, acf_flags, repr_flags;

    auto* train_cmd = app.add_subcommand("train", "train a model and write every artifact to output_dir");
    train_flags.attach(*train_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on one split (stride 1)");
    std::string eval_ckpt, eval_split = "test", eval_out;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--split", eval_split, "train, val, test or all");
    eval_cmd->add_option("--out", eval_out, "directory for the report (default: next to the checkpoint)");
    eval_flags.attach(*eval_cmd);

    auto* acf_cmd = app.add_subcommand("autocorr", "global ACF of the training split as CSV");
    std::optional<std::size_t> acf_max_lag;
    std::string acf_method = "fft", acf_out;
    acf_cmd->add_option("--max-lag", acf_max_lag, "largest lag (default: training windows - 1)");
    acf_cmd->add_option("--method", acf_method, "fft or direct")->check(CLI::IsMember({"fft", "direct"}));
    acf_cmd->add_option("--out", acf_out, "output CSV (default: stdout)");
    acf_flags.attach(*acf_cmd);

    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic sinusoid + trend + noise series");
    std::string synth_components, synth_out;
    SynthSpec synth;
    synth_cmd->add_option("--components", synth_components, "period:amplitude list, e.g. 1000:1,24:0.5");
    synth_cmd->add_option("--slope", synth.slope, "linear trend per step");
    synth_cmd->add_option("--noise", synth.noise, "Gaussian noise sigma");
    synth_cmd->add_option("--length", synth.length, "number of points")->required();
    synth_cmd->add_option("--seed", synth.seed, "noise seed");
    synth_cmd->add_option("--out", synth_out, "output CSV (default: stdout)");

    auto* repr_cmd = app.add_subcommand("repr-sim", "cosine similarity of pooled representations to an anchor window");
    std::string repr_ckpt, repr_split = "all", repr_out;
    std::size_t repr_anchor = 0, repr_channel = 0;
    std::optional<std::size_t> repr_smooth;
    repr_cmd->add_option("--checkpoint", repr_ckpt, "checkpoint file")->required();
    repr_cmd->add_option("--anchor", repr_anchor, "global start index of the anchor window")->required();
    repr_cmd->add_option("--split", repr_split, "train, val, test or all");
    repr_cmd->add_option("--channel", repr_channel, "series channel");
    repr_cmd->add_option("--smooth", repr_smooth, "odd moving-average width for the smoothed column");
    repr_cmd->add_option("--out", repr_out, "output CSV (default: stdout)");
    repr_flags.attach(*repr_cmd);

    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every op and the full loss");
    std::size_t grad_seeds = 10;
    double grad_tol = 1e-4;
    std::uint64_t grad_seed = 1;
    std::string grad_out;
    grad_cmd->add_option("--seeds", grad_seeds, "random draws per op");
    grad_cmd->add_option("--tolerance", grad_tol, "max relative error");
    grad_cmd->add_option("--seed", grad_seed, "base seed");
    grad_cmd->add_option("--out", grad_out, "output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

    if (*train_cmd) {
        train_flags.normalize(*train_cmd);
        const auto config = train_flags.resolve();
        const auto result = train(config);
        std::printf("config_hash = %s\noutput_dir = %s\nepochs = %zu\nbest_epoch = %zu\ntest_mse = %.17g\ntest_mae = %.17g\n",
                    result.config_hash.c_str(), config.output_dir.c_str(), result.trace.size(), result.best_epoch,
                    result.test.aggregate.mse, result.test.aggregate.mae);
    } else if (*eval_cmd) {
        eval_flags.normalize(*eval_cmd);
        auto loaded = load_for_checkpoint(eval_ckpt, eval_flags);
        auto report = evaluate_segment(loaded.checkpoint.params, loaded.data, loaded.data.segment(eval_split));
        report.config = loaded.checkpoint.config;
        report.config_hash = loaded.checkpoint.config_hash;
        const std::filesystem::path dir = eval_out.empty() ? std::filesystem::path(eval_ckpt).parent_path() : std::filesystem::path(eval_out);
        if (!dir.empty()) std::filesystem::create_directories(dir);
        const auto& hash = report.config_hash;
        write_text_atomic(dir / ("eval_" + eval_split + "_horizon.csv"), with_hash(hash, horizon_csv(report)));
        write_text_atomic(dir / ("eval_" + eval_split + "_windows.csv"), with_hash(hash, window_csv(report)));
        const auto summary = summary_text(report);
        write_text_atomic(dir / ("eval_" + eval_split + "_summary.txt"), summary);
        std::cout << summary;
    } else if (*acf_cmd) {
        acf_flags.normalize(*acf_cmd);
        const auto config = acf_flags.resolve();
        config.validate();
        const auto data = load_run_data(config);
        const auto train_series = data.split.train.materialize();
        const std::size_t lag = acf_max_lag.value_or(data.split.train.window_count(data.spec) - 1);
        const auto acf = global_acf(train_series, lag, effective_smoothing_k(config, data),
                                    acf_method == "fft" ? AcfMethod::fft : AcfMethod::direct);
        emit(acf_out, with_hash(config_hash(config), acf_csv(acf, data.series->channel_names)));
    } else if (*synth_cmd) {
        synth.components = parse_components(synth_components);
        emit(synth_out, series_csv(synthesize(synth)));
    } else if (*repr_cmd) {
        repr_flags.normalize(*repr_cmd);
        auto loaded = load_for_checkpoint(repr_ckpt, repr_flags);
        const auto rows = repr_similarity(loaded.checkpoint.params, loaded.data, loaded.data.segment(repr_split),
                                          repr_anchor, repr_channel, repr_smooth.value_or(loaded.config.repr_smooth_k));
        emit(repr_out, with_hash(loaded.checkpoint.config_hash, repr_sim_csv(rows)));
    } else if (*grad_cmd) {
        const auto entries = run_gradcheck(grad_seeds, grad_tol, grad_seed);
        emit(grad_out, gradcheck_csv(entries));
        const bool ok = std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
        if (!ok) return fail("gradcheck", "one or more ops exceed the tolerance", 1);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        return fail("config", e.what(), 2);
    } catch (const ParameterError& e) {
        return fail("parameter", e.what(), 2);
    } catch (const DimensionError& e) {
        return fail("dimension", e.what(), 2);
    } catch (const DataError& e) {
        return fail("data", e.what(), 3);
    } catch (const DomainError& e) {
        return fail("domain", e.what(), 3);
    } catch (const DivergenceError& e) {
        return fail("divergence", e.what(), 4);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
}
