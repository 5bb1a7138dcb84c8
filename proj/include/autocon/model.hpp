#pragma once

#include "autocon/data.hpp"
#include "autocon/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace autocon {

/// Structural hyperparameters of the two-branch forecaster.
struct ModelConfig {
    std::size_t input = 96;
    std::size_t output = 96;
    std::size_t features = 0;  ///< timestamp features per step
    std::size_t width = 64;    ///< representation width d
    std::size_t depth = 3;     ///< residual dilated conv blocks
    int conv_kernel = 3;
    std::vector<int> ma_kernels{25, 49, 97};
    bool use_short = true;
    bool use_long = true;

    void validate() const;
};

/**
 * Learnable weights. Channels share every parameter (channel independence),
 * so shapes do not depend on the number of series channels.
 */
struct ModelParams {
    ModelConfig config;

    Parameter short_weight;  ///< [O x I]

    Parameter input_proj;  ///< [(1+f) x d]
    Parameter input_bias;  ///< [d]
    std::vector<Parameter> conv_weight;  ///< depth x [k x d x d], dilation 2^l
    std::vector<Parameter> conv_bias;    ///< depth x [d]

    Parameter time_weight;     ///< [O x I]
    Parameter time_bias;       ///< [d]
    Parameter channel_weight;  ///< [d x 1]
    Parameter channel_bias;    ///< [1]

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every buffer.
    [[nodiscard]] static ModelParams init(const ModelConfig& config, std::uint64_t seed);
    [[nodiscard]] static ModelParams zeros(const ModelConfig& config);

    /// Stable order used by the optimizer and checkpoints.
    [[nodiscard]] std::vector<Parameter*> list();
    [[nodiscard]] std::vector<const Parameter*> list() const;
    void zero_grad();
};

/// Tape values of one forward pass. Channels are folded into the batch: row b = n*c + ch.
struct ForwardResult {
    Value pred;          ///< [B x O x 1] denormalized
    Value short_term;    ///< [B x O x 1]; invalid when the branch is ablated
    Value long_term;     ///< [B x O x 1]; invalid when the branch is ablated
    Value representation;  ///< v, [B x I x d]; invalid without the long branch
    Value pooled;        ///< [B x d]
    Tensor input_mean;   ///< [B x O x 1] X-bar broadcast over the horizon
    std::size_t windows = 0;
    std::size_t channels = 0;
};

/// Per-window view of a forward pass (unfolded back to channels).
struct ForwardOutput {
    Tensor pred;        ///< [O x c]
    Tensor short_term;  ///< [O x c]
    Tensor long_term;   ///< [O x c]
    Tensor representation;  ///< [c x I x d]
};

/// X - X-bar per channel, folded to [N*c x I x 1].
[[nodiscard]] Tensor normalize_inputs(const WindowBatch& batch);

/// Input-segment timestamp features repeated per channel, [N*c x I x f].
[[nodiscard]] Tensor fold_features(const WindowBatch& batch);

/// Targets folded to [N*c x O x 1].
[[nodiscard]] Tensor fold_targets(const WindowBatch& batch);

Value short_branch(Tape& tape, ModelParams& params, const Value& x_norm);
Value encode(Tape& tape, ModelParams& params, const Value& x_norm, const Value& features);
/// MLP then the multi-scale moving-average block.
Value decode_long(Tape& tape, ModelParams& params, const Value& v);

ForwardResult forward(Tape& tape, ModelParams& params, const WindowBatch& batch);

/// Unfolds a [N*c x L x 1] tensor into N tensors of [L x c].
[[nodiscard]] std::vector<Tensor> unfold_windows(const Tensor& folded, std::size_t windows, std::size_t channels);
[[nodiscard]] std::vector<ForwardOutput> per_window(const ForwardResult& result);

struct LossBreakdown {
    Value total;
    double mse = 0.0;
    double autocon = 0.0;
};

/**
 * MSE over denormalized predictions plus lambda times the channel-averaged
 * AutoCon loss on pooled representations. With lambda == 0 (or no long
 * branch) the AutoCon term is reported but kept off the gradient path.
 */
LossBreakdown total_loss(const ForwardResult& result, const WindowBatch& batch, const std::vector<Tensor>& relations,
                         double lambda, double tau);

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct Checkpoint {
    ModelParams params;
    ConfigEcho config;
    std::string config_hash;
    std::string rng_state;
};

/// Text container, bitwise round trip (hex floats).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace autocon
