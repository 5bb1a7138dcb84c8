#pragma once

#include "autocon/autocorr.hpp"
#include "autocon/config.hpp"
#include "autocon/data.hpp"
#include "autocon/metrics.hpp"
#include "autocon/model.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace autocon {

/// s_t = sum amp_i sin(2 pi t / p_i) + slope t + eps_t, one channel named "value".
[[nodiscard]] Series synthesize(const SynthSpec& spec);
/// Header "value" (one column per channel name) and %.17g rows; byte-stable per seed.
[[nodiscard]] std::string series_csv(const Series& series);

/// The series of a run, split and windowed as the config says.
struct RunData {
    std::shared_ptr<const Series> series;
    Split split;
    WindowSpec spec;
    TimeFeatureOptions features;

    /// "train", "val", "test" or "all".
    [[nodiscard]] Segment segment(const std::string& name) const;
};

[[nodiscard]] RunData load_run_data(const RunConfig& config);
[[nodiscard]] ModelConfig model_config(const RunConfig& config, std::size_t features);

/// Smoothing width actually used for the training ACF (config value or the
/// frequency default, shrunk to fit the training split).
[[nodiscard]] int effective_smoothing_k(const RunConfig& config, const RunData& data);
/// Global ACF of the training split up to lag M_train - 1.
[[nodiscard]] AcfTable training_acf(const RunConfig& config, const RunData& data);

struct EpochStats {
    std::size_t epoch = 0;
    std::size_t iterations = 0;
    double mse = 0.0;      ///< means over the epoch's iterations
    double autocon = 0.0;
    double total = 0.0;
    double val_mse = 0.0;
};

struct TrainResult {
    ModelParams params;  ///< best by validation MSE
    std::vector<EpochStats> trace;
    std::size_t best_epoch = 0;
    AcfTable acf;
    std::size_t acf_computations = 0;  ///< global_acf calls made by this run
    EvalReport test;
    std::string config_hash;
};

/// Runs the training loop. With `write_artifacts` every output lands in config.output_dir.
TrainResult train(const RunConfig& config, bool write_artifacts = true);

struct Predictions {
    std::vector<std::size_t> starts;
    std::vector<Tensor> preds;   ///< [O x c] each
    std::vector<Tensor> truths;  ///< [O x c] each
};

/// Forecasts every `stride`-th window of the segment.
[[nodiscard]] Predictions predict_segment(ModelParams& params, const RunData& data, const Segment& segment,
                                          std::size_t stride = 1);

/// All four metrics over every window (stride 1) of the segment.
[[nodiscard]] EvalReport evaluate_segment(ModelParams& params, const RunData& data, const Segment& segment);

/// Throws DimensionError when the checkpoint cannot consume the data's windows.
void check_compatible(const ModelConfig& model, const RunData& data);

/// Pooled representation of the given channel for every window start, [starts.size() x d].
[[nodiscard]] Tensor pooled_representations(ModelParams& params, const RunData& data,
                                            std::span<const std::size_t> starts, std::size_t channel = 0);

struct ReprSimRow {
    std::size_t start = 0;
    long long lag = 0;  ///< start - anchor
    double sim = 0.0;
    double smoothed = 0.0;
};

/// Cosine similarity of the anchor window's pooled representation to every window of the segment.
[[nodiscard]] std::vector<ReprSimRow> repr_similarity(ModelParams& params, const RunData& data,
                                                      const Segment& segment, std::size_t anchor,
                                                      std::size_t channel = 0, std::size_t smooth_k = 1);
[[nodiscard]] std::string repr_sim_csv(const std::vector<ReprSimRow>& rows);

/// One row of the finite-difference suite.
struct GradcheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t trials = 0;
    bool passed = false;
};

/// Names of every registered check, in report order.
[[nodiscard]] std::vector<std::string> gradcheck_names();
/// Runs every registered op and the full training loss against central differences.
[[nodiscard]] std::vector<GradcheckEntry> run_gradcheck(std::size_t seeds = 10, double tolerance = 1e-4,
                                                        std::uint64_t base_seed = 1);
[[nodiscard]] std::string gradcheck_csv(const std::vector<GradcheckEntry>& entries);

/// Prefixes `# config_hash=<hash>` to a CSV body.
[[nodiscard]] std::string with_hash(const std::string& hash, const std::string& body);

}  // namespace autocon
