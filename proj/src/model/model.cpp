#include "autocon/model.hpp"

#include "autocon/autocon_loss.hpp"
#include "autocon/errors.hpp"
#include "autocon/ops.hpp"

#include <cmath>
#include <random>

namespace autocon {
namespace {

Parameter uniform_param(std::string name, Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = dist(rng);
    return Parameter(std::move(name), std::move(t));
}

Parameter zero_param(std::string name, Shape shape) { return Parameter(std::move(name), Tensor(std::move(shape))); }

template <typename Make>
ModelParams build(const ModelConfig& cfg, Make&& make) {
    cfg.validate();
    const std::size_t I = cfg.input, O = cfg.output, d = cfg.width, cin = 1 + cfg.features;
    const auto k = static_cast<std::size_t>(cfg.conv_kernel);
    ModelParams p;
    p.config = cfg;
    p.short_weight = make("short.weight", Shape{O, I}, I);
    p.input_proj = make("encoder.input_proj", Shape{cin, d}, cin);
    p.input_bias = make("encoder.input_bias", Shape{d}, cin);
    for (std::size_t l = 0; l < cfg.depth; ++l) {
        p.conv_weight.push_back(make("encoder.conv" + std::to_string(l) + ".weight", Shape{k, d, d}, k * d));
        p.conv_bias.push_back(make("encoder.conv" + std::to_string(l) + ".bias", Shape{d}, k * d));
    }
    p.time_weight = make("decoder.time_weight", Shape{O, I}, I);
    p.time_bias = make("decoder.time_bias", Shape{d}, I);
    p.channel_weight = make("decoder.channel_weight", Shape{d, 1}, d);
    p.channel_bias = make("decoder.channel_bias", Shape{1}, d);
    return p;
}

}  // namespace

void ModelConfig::validate() const {
    if (input < 1 || output < 1) throw ConfigError("model input/output lengths must be >= 1");
    if (width < 1) throw ConfigError("model width must be >= 1");
    if (conv_kernel < 1) throw ConfigError("conv kernel must be >= 1");
    if (ma_kernels.empty()) throw ConfigError("at least one moving-average kernel is required");
    for (const int k : ma_kernels) {
        if (k < 1 || k % 2 == 0) throw ConfigError("moving-average kernels must be odd and >= 1, got " + std::to_string(k));
    }
    if (!use_short && !use_long) throw ConfigError("ablating both branches leaves a mean-only model");
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return build(config, [&](std::string name, Shape shape, std::size_t fan_in) {
        return uniform_param(std::move(name), std::move(shape), fan_in, rng);
    });
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
    return build(config, [](std::string name, Shape shape, std::size_t) { return zero_param(std::move(name), std::move(shape)); });
}

std::vector<Parameter*> ModelParams::list() {
    std::vector<Parameter*> out{&short_weight, &input_proj, &input_bias};
    for (std::size_t l = 0; l < conv_weight.size(); ++l) {
        out.push_back(&conv_weight[l]);
        out.push_back(&conv_bias[l]);
    }
    out.insert(out.end(), {&time_weight, &time_bias, &channel_weight, &channel_bias});
    return out;
}

std::vector<const Parameter*> ModelParams::list() const {
    auto mut = const_cast<ModelParams*>(this)->list();
    return {mut.begin(), mut.end()};
}

void ModelParams::zero_grad() {
    for (auto* p : list()) p->zero_grad();
}

Tensor normalize_inputs(const WindowBatch& batch) {
    const std::size_t N = batch.size(), I = batch.spec.input, c = batch.channels();
    Tensor out({N * c, I, 1});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double m = batch.input_mean.data[n * c + ch];
            for (std::size_t t = 0; t < I; ++t) {
                out.data[(n * c + ch) * I + t] = batch.inputs.data[(n * I + t) * c + ch] - m;
            }
        }
    return out;
}

Tensor fold_features(const WindowBatch& batch) {
    const std::size_t N = batch.size(), I = batch.spec.input, W = batch.spec.window(), c = batch.channels();
    const std::size_t f = batch.feature_count();
    Tensor out({N * c, I, f});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t t = 0; t < I; ++t)
                for (std::size_t j = 0; j < f; ++j) {
                    out.data[((n * c + ch) * I + t) * f + j] = batch.features.data[(n * W + t) * f + j];
                }
    return out;
}

Tensor fold_targets(const WindowBatch& batch) {
    const std::size_t N = batch.size(), O = batch.spec.output, c = batch.channels();
    Tensor out({N * c, O, 1});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t t = 0; t < O; ++t) {
                out.data[(n * c + ch) * O + t] = batch.targets.data[(n * O + t) * c + ch];
            }
    return out;
}

Value short_branch(Tape& tape, ModelParams& params, const Value& x_norm) {
    return matmul(tape.parameter(params.short_weight), x_norm);
}

Value encode(Tape& tape, ModelParams& params, const Value& x_norm, const Value& features) {
    const auto& cfg = params.config;
    Value h = cfg.features > 0 ? concat_last(x_norm, features) : x_norm;
    h = add_bias(matmul(h, tape.parameter(params.input_proj)), tape.parameter(params.input_bias));
    for (std::size_t l = 0; l < cfg.depth; ++l) {
        const int dilation = 1 << l;
        const auto conv = conv1d_causal(h, tape.parameter(params.conv_weight[l]), dilation);
        h = add(h, gelu(add_bias(conv, tape.parameter(params.conv_bias[l]))));
    }
    return h;
}

Value decode_long(Tape& tape, ModelParams& params, const Value& v) {
    auto z = matmul(tape.parameter(params.time_weight), v);
    z = gelu(add_bias(z, tape.parameter(params.time_bias)));
    z = add_bias(matmul(z, tape.parameter(params.channel_weight)), tape.parameter(params.channel_bias));

    const auto& kernels = params.config.ma_kernels;
    Value acc;
    for (const int k : kernels) {
        const auto smoothed = avgpool1d(replicate_pad(z, (k - 1) / 2, k / 2), k);
        acc = acc.valid() ? add(acc, smoothed) : smoothed;
    }
    return kernels.size() == 1 ? acc : scale(acc, 1.0 / static_cast<double>(kernels.size()));
}

ForwardResult forward(Tape& tape, ModelParams& params, const WindowBatch& batch) {
    const auto& cfg = params.config;
    if (batch.spec.input != cfg.input || batch.spec.output != cfg.output) {
        throw DimensionError("batch window " + std::to_string(batch.spec.input) + "/" + std::to_string(batch.spec.output) +
                             " does not match model " + std::to_string(cfg.input) + "/" + std::to_string(cfg.output));
    }
    if (batch.feature_count() != cfg.features) {
        throw DimensionError("batch carries " + std::to_string(batch.feature_count()) + " time features, model expects " +
                             std::to_string(cfg.features));
    }
    const std::size_t N = batch.size(), c = batch.channels(), O = cfg.output;

    ForwardResult r;
    r.windows = N;
    r.channels = c;
    r.input_mean = Tensor({N * c, O, 1});
    for (std::size_t b = 0; b < N * c; ++b)
        for (std::size_t t = 0; t < O; ++t) r.input_mean.data[b * O + t] = batch.input_mean.data[b];

    const auto x_norm = tape.constant(normalize_inputs(batch));
    if (cfg.use_short) r.short_term = short_branch(tape, params, x_norm);
    if (cfg.use_long) {
        const auto feats = tape.constant(fold_features(batch));
        r.representation = encode(tape, params, x_norm, feats);
        r.pooled = max_pool_time(r.representation);
        r.long_term = decode_long(tape, params, r.representation);
    }
    Value sum_branches = r.short_term.valid() && r.long_term.valid() ? add(r.short_term, r.long_term)
                         : r.short_term.valid()                      ? r.short_term
                                                                     : r.long_term;
    r.pred = add(sum_branches, tape.constant(r.input_mean));
    return r;
}

std::vector<Tensor> unfold_windows(const Tensor& folded, std::size_t windows, std::size_t channels) {
    if (folded.rank() != 3 || folded.shape[0] != windows * channels) {
        throw DimensionError("unfold_windows: unexpected shape " + shape_str(folded.shape));
    }
    const std::size_t L = folded.shape[1], inner = folded.shape[2];
    if (inner != 1) throw DimensionError("unfold_windows: expected trailing axis of 1");
    std::vector<Tensor> out;
    out.reserve(windows);
    for (std::size_t n = 0; n < windows; ++n) {
        Tensor w({L, channels});
        for (std::size_t ch = 0; ch < channels; ++ch)
            for (std::size_t t = 0; t < L; ++t) w.data[t * channels + ch] = folded.data[(n * channels + ch) * L + t];
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<ForwardOutput> per_window(const ForwardResult& result) {
    const std::size_t N = result.windows, c = result.channels;
    const auto preds = unfold_windows(result.pred.tensor(), N, c);
    const auto shorts = result.short_term.valid() ? unfold_windows(result.short_term.tensor(), N, c) : std::vector<Tensor>{};
    const auto longs = result.long_term.valid() ? unfold_windows(result.long_term.tensor(), N, c) : std::vector<Tensor>{};
    std::vector<ForwardOutput> out(N);
    for (std::size_t n = 0; n < N; ++n) {
        out[n].pred = preds[n];
        out[n].short_term = shorts.empty() ? Tensor(preds[n].shape) : shorts[n];
        out[n].long_term = longs.empty() ? Tensor(preds[n].shape) : longs[n];
        if (result.representation.valid()) {
            const auto& s = result.representation.shape();
            const std::size_t per = s[1] * s[2];
            const auto v = result.representation.data();
            out[n].representation = Tensor({c, s[1], s[2]},
                                           std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(n * c * per),
                                                               v.begin() + static_cast<std::ptrdiff_t>((n + 1) * c * per)));
        }
    }
    return out;
}

LossBreakdown total_loss(const ForwardResult& result, const WindowBatch& batch, const std::vector<Tensor>& relations,
                         double lambda, double tau) {
    if (lambda < 0.0) throw ParameterError("lambda must be >= 0, got " + std::to_string(lambda));
    Tape& tape = result.pred.tape();
    LossBreakdown out;
    const auto mse = mse_loss(result.pred, tape.constant(fold_targets(batch)));
    out.mse = mse.item();
    out.total = mse;
    if (result.pooled.valid() && batch.size() >= 2) {
        const auto con = autocon_loss_channels(result.pooled, relations, tau);
        out.autocon = con.item();
        if (lambda > 0.0) out.total = add(mse, scale(con, lambda));
    }
    return out;
}

}  // namespace autocon
