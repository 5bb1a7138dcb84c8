#pragma once

#include "autocon/data.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace autocon {

/// Sinusoids plus trend plus Gaussian noise.
struct SynthSpec {
    std::vector<std::pair<double, double>> components;  ///< (period, amplitude)
    double slope = 0.0;
    double noise = 0.0;
    std::size_t length = 0;
    std::uint64_t seed = 0;
};

/// Parses "period:amplitude,period:amplitude,...".
[[nodiscard]] std::vector<std::pair<double, double>> parse_components(const std::string& text);

/// Every knob of a run. Flat `key = value` on disk; unknown keys are rejected.
struct RunConfig {
    // data
    std::string data;            ///< CSV path; empty selects the synthetic series below
    std::string date_column;
    std::string value_columns;   ///< comma separated; empty = all
    std::string freq;            ///< override of the inferred frequency; empty keeps it
    SynthSpec synth;
    SplitRatios split;
    double period_hint = 0.0;    ///< sin/cos clock period without calendar; 0 = no features

    // windows and model
    std::size_t input = 96;
    std::size_t output = 96;
    std::size_t width = 64;
    std::size_t depth = 3;
    int conv_kernel = 3;
    std::vector<int> kernels{25, 49, 97};
    bool no_short = false;
    bool no_long = false;

    // objective
    double lambda = 0.1;
    double tau = 1.0;
    bool no_autocon = false;
    int smoothing_k = 0;  ///< 0 = frequency default

    // optimisation
    std::size_t batch = 32;
    std::size_t epochs = 10;
    std::size_t patience = 3;
    std::size_t iters_per_epoch = 0;  ///< 0 = every batch of the shuffled epoch
    double lr = 1e-3;
    std::uint64_t seed = 2024;
    std::size_t val_stride = 1;

    // outputs
    std::string output_dir = "runs/autocon";
    std::size_t repr_smooth_k = 25;

    /// Effective AutoCon weight after the no_autocon flag.
    [[nodiscard]] double effective_lambda() const { return no_autocon ? 0.0 : lambda; }
    [[nodiscard]] WindowSpec window_spec() const { return {input, output}; }

    void validate() const;
};

/// Sets one key from its text form. Throws ConfigError on unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Reads `key = value` lines ('#' starts a comment) on top of `base`.
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Every key in a fixed order with its current text value.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& config);

/// Rebuilds a config from an echo (e.g. from a checkpoint).
[[nodiscard]] RunConfig config_from_echo(const std::vector<std::pair<std::string, std::string>>& echo);

/// 16 hex digits of FNV-1a over the echo.
[[nodiscard]] std::string config_hash(const RunConfig& config);

/// Names of all recognised keys, in echo order.
[[nodiscard]] std::vector<std::string> config_keys();

}  // namespace autocon
