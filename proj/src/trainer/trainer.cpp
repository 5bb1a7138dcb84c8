#include "autocon/trainer.hpp"

#include "autocon/adam.hpp"
#include "autocon/autocon_loss.hpp"
#include "autocon/errors.hpp"
#include "autocon/io.hpp"
#include "autocon/ops.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace autocon {
namespace {

constexpr std::size_t kPredictChunk = 64;
constexpr std::uint64_t kSamplerSalt = 0x9e3779b97f4a7c15ULL;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

Tensor slice_window(const Tensor& batched, std::size_t n) {
    const std::size_t L = batched.shape[1], c = batched.shape[2];
    Tensor out({L, c});
    std::copy_n(batched.data.begin() + static_cast<std::ptrdiff_t>(n * L * c), L * c, out.data.begin());
    return out;
}

std::vector<Tensor> relations_for(const AcfTable& acf, std::span<const std::size_t> starts) {
    std::vector<Tensor> out;
    out.reserve(acf.channels());
    for (std::size_t ch = 0; ch < acf.channels(); ++ch) out.push_back(relation_matrix(acf, starts, ch));
    return out;
}

double mean_mse(const Predictions& p) {
    double acc = 0.0;
    for (std::size_t w = 0; w < p.preds.size(); ++w) acc += mse(p.preds[w], p.truths[w]);
    return acc / static_cast<double>(p.preds.size());
}

std::vector<std::size_t> strided(std::vector<std::size_t> starts, std::size_t stride) {
    if (stride <= 1) return starts;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < starts.size(); i += stride) out.push_back(starts[i]);
    return out;
}

std::string loss_trace_csv(const std::vector<EpochStats>& trace) {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,mse,autocon,total,val_mse\n";
    for (const auto& e : trace) os << e.epoch << ',' << e.mse << ',' << e.autocon << ',' << e.total << ',' << e.val_mse << '\n';
    return os.str();
}

}  // namespace

Series synthesize(const SynthSpec& spec) {
    for (const auto& [p, a] : spec.components) {
        if (!(p > 0.0)) throw ParameterError("synth: period must be positive, got " + std::to_string(p));
    }
    if (spec.length == 0) throw ParameterError("synth: length must be positive");
    if (spec.noise < 0.0) throw ParameterError("synth: noise sigma must be >= 0");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> eps(0.0, 1.0);
    Tensor values({spec.length, 1});
    for (std::size_t t = 0; t < spec.length; ++t) {
        const double td = static_cast<double>(t);
        double s = spec.slope * td;
        for (const auto& [p, a] : spec.components) s += a * std::sin(2.0 * M_PI * td / p);
        if (spec.noise > 0.0) s += spec.noise * eps(rng);
        values.data[t] = s;
    }
    auto series = make_series("synthetic", std::move(values));
    series.channel_names = {"value"};
    return series;
}

std::string series_csv(const Series& series) {
    std::string out;
    for (std::size_t ch = 0; ch < series.channels(); ++ch) out += (ch ? "," : "") + series.channel_names.at(ch);
    out += '\n';
    char buf[40];
    for (std::size_t t = 0; t < series.length(); ++t) {
        for (std::size_t ch = 0; ch < series.channels(); ++ch) {
            std::snprintf(buf, sizeof buf, "%.17g", series.at(t, ch));
            if (ch) out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

Segment RunData::segment(const std::string& name) const {
    if (name == "train") return split.train;
    if (name == "val") return split.val;
    if (name == "test") return split.test;
    if (name == "all") return Segment{series, 0, series->length(), 0};
    throw ConfigError("unknown split '" + name + "' (expected train, val, test or all)");
}

RunData load_run_data(const RunConfig& config) {
    Series series;
    if (!config.data.empty()) {
        CsvOptions opts;
        if (!config.date_column.empty()) opts.date_column = config.date_column;
        opts.value_columns = split_list(config.value_columns);
        series = load_csv(config.data, opts);
    } else {
        series = synthesize(config.synth);
    }
    if (!config.freq.empty()) series.freq = parse_frequency(config.freq);

    RunData data;
    data.spec = config.window_spec();
    data.features.period_hint = config.period_hint;
    data.series = std::make_shared<const Series>(std::move(series));
    data.split = chrono_split(data.series, config.split, data.spec);
    return data;
}

ModelConfig model_config(const RunConfig& config, std::size_t features) {
    ModelConfig mc;
    mc.input = config.input;
    mc.output = config.output;
    mc.features = features;
    mc.width = config.width;
    mc.depth = config.depth;
    mc.conv_kernel = config.conv_kernel;
    mc.ma_kernels = config.kernels;
    mc.use_short = !config.no_short;
    mc.use_long = !config.no_long;
    mc.validate();
    return mc;
}

int effective_smoothing_k(const RunConfig& config, const RunData& data) {
    int k = config.smoothing_k > 0 ? config.smoothing_k : default_smoothing_k(data.series->freq);
    const auto T = static_cast<int>(data.split.train.length());
    if (k > T) k = T % 2 == 1 ? T : T - 1;
    return k;
}

AcfTable training_acf(const RunConfig& config, const RunData& data) {
    const Series train = data.split.train.materialize();
    const std::size_t M = data.split.train.window_count(data.spec);
    return global_acf(train, M - 1, effective_smoothing_k(config, data));
}

void check_compatible(const ModelConfig& model, const RunData& data) {
    const std::size_t f = time_feature_count(*data.series, data.features);
    if (model.input != data.spec.input || model.output != data.spec.output || model.features != f) {
        throw DimensionError("checkpoint expects I=" + std::to_string(model.input) + " O=" + std::to_string(model.output) +
                             " f=" + std::to_string(model.features) + " but data gives I=" +
                             std::to_string(data.spec.input) + " O=" + std::to_string(data.spec.output) +
                             " f=" + std::to_string(f));
    }
}

Predictions predict_segment(ModelParams& params, const RunData& data, const Segment& segment, std::size_t stride) {
    check_compatible(params.config, data);
    Predictions out;
    out.starts = strided(segment.window_starts(data.spec), stride);
    if (out.starts.empty()) throw DomainError("segment has no complete window");
    for (std::size_t from = 0; from < out.starts.size(); from += kPredictChunk) {
        const std::size_t to = std::min(out.starts.size(), from + kPredictChunk);
        const std::span<const std::size_t> chunk(out.starts.data() + from, to - from);
        const auto batch = make_batch(*data.series, data.spec, chunk, data.features);
        Tape tape;
        const auto result = forward(tape, params, batch);
        auto preds = unfold_windows(result.pred.tensor(), result.windows, result.channels);
        for (std::size_t n = 0; n < chunk.size(); ++n) {
            out.preds.push_back(std::move(preds[n]));
            out.truths.push_back(slice_window(batch.targets, n));
        }
    }
    return out;
}

EvalReport evaluate_segment(ModelParams& params, const RunData& data, const Segment& segment) {
    const auto p = predict_segment(params, data, segment, 1);
    return evaluate_predictions(p.preds, p.truths, p.starts);
}

Tensor pooled_representations(ModelParams& params, const RunData& data, std::span<const std::size_t> starts,
                              std::size_t channel) {
    check_compatible(params.config, data);
    if (!params.config.use_long) throw ConfigError("pooled representations need the long-term branch");
    if (channel >= data.series->channels()) throw DomainError("channel " + std::to_string(channel) + " out of range");
    const std::size_t d = params.config.width;
    const std::size_t c = data.series->channels();
    Tensor out({starts.size(), d});
    for (std::size_t from = 0; from < starts.size(); from += kPredictChunk) {
        const std::size_t to = std::min(starts.size(), from + kPredictChunk);
        const auto batch = make_batch(*data.series, data.spec, starts.subspan(from, to - from), data.features);
        Tape tape;
        const auto result = forward(tape, params, batch);
        const auto& pooled = result.pooled.data();
        for (std::size_t n = 0; n < to - from; ++n) {
            std::copy_n(pooled.begin() + static_cast<std::ptrdiff_t>((n * c + channel) * d), d,
                        out.data.begin() + static_cast<std::ptrdiff_t>((from + n) * d));
        }
    }
    return out;
}

std::vector<ReprSimRow> repr_similarity(ModelParams& params, const RunData& data, const Segment& segment,
                                        std::size_t anchor, std::size_t channel, std::size_t smooth_k) {
    const auto starts = segment.window_starts(data.spec);
    if (starts.empty()) throw DomainError("segment has no complete window");
    if (anchor < starts.front() || anchor > starts.back()) {
        throw DomainError("anchor " + std::to_string(anchor) + " outside window starts [" + std::to_string(starts.front()) +
                          ", " + std::to_string(starts.back()) + "]");
    }
    const std::vector<std::size_t> anchor_start{anchor};
    const Tensor a = pooled_representations(params, data, anchor_start, channel);
    const Tensor reps = pooled_representations(params, data, starts, channel);
    const std::size_t d = a.size();

    Tape tape;
    const auto av = tape.constant(Tensor({d}, a.data));
    std::vector<double> sims(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        Tensor row({d});
        std::copy_n(reps.data.begin() + static_cast<std::ptrdiff_t>(i * d), d, row.data.begin());
        sims[i] = cosine_sim(av, tape.constant(std::move(row))).item();
    }
    std::size_t k = std::max<std::size_t>(1, smooth_k);
    if (k > sims.size()) k = sims.size() % 2 == 1 ? sims.size() : sims.size() - 1;
    const auto smoothed = moving_average(sims, static_cast<int>(k));

    std::vector<ReprSimRow> rows(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        rows[i] = {starts[i], static_cast<long long>(starts[i]) - static_cast<long long>(anchor), sims[i], smoothed[i]};
    }
    return rows;
}

std::string repr_sim_csv(const std::vector<ReprSimRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "start,lag,sim,smoothed\n";
    for (const auto& r : rows) os << r.start << ',' << r.lag << ',' << r.sim << ',' << r.smoothed << '\n';
    return os.str();
}

std::string with_hash(const std::string& hash, const std::string& body) {
    return "# config_hash=" + hash + "\n" + body;
}

TrainResult train(const RunConfig& config, bool write_artifacts) {
    config.validate();
    const RunData data = load_run_data(config);
    const std::size_t f = time_feature_count(*data.series, data.features);
    const ModelConfig mc = model_config(config, f);

    TrainResult result;
    result.config_hash = config_hash(config);
    const double lambda = config.effective_lambda();

    const std::size_t acf_before = acf_compute_count();
    result.acf = training_acf(config, data);
    result.acf_computations = acf_compute_count() - acf_before;

    ModelParams params = ModelParams::init(mc, config.seed);
    ModelParams best = params;
    Adam adam(AdamOptions{config.lr});
    std::mt19937_64 rng(config.seed ^ kSamplerSalt);
    const EpochSampler sampler(data.split.train.window_starts(data.spec), config.batch);

    double best_val = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    std::size_t iteration = 0;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        auto batches = sampler.epoch(rng);
        if (config.iters_per_epoch > 0 && batches.size() > config.iters_per_epoch) batches.resize(config.iters_per_epoch);

        EpochStats stats;
        stats.epoch = epoch;
        for (const auto& starts : batches) {
            ++iteration;
            const auto batch = make_batch(*data.series, data.spec, starts, data.features);
            Tape tape;
            const auto fwd = forward(tape, params, batch);
            const auto loss = total_loss(fwd, batch, relations_for(result.acf, starts), lambda, config.tau);
            const double total = loss.total.item();
            if (!std::isfinite(total)) {
                throw DivergenceError("non-finite loss " + std::to_string(total) + " at epoch " + std::to_string(epoch) +
                                      " iteration " + std::to_string(iteration) + " (mse " + std::to_string(loss.mse) +
                                      ", autocon " + std::to_string(loss.autocon) + ")");
            }
            params.zero_grad();
            tape.backward(loss.total);
            const auto list = params.list();
            adam.step(list);
            stats.mse += loss.mse;
            stats.autocon += loss.autocon;
            stats.total += total;
            ++stats.iterations;
        }
        if (stats.iterations > 0) {
            const auto n = static_cast<double>(stats.iterations);
            stats.mse /= n;
            stats.autocon /= n;
            stats.total /= n;
        }
        stats.val_mse = mean_mse(predict_segment(params, data, data.split.val, config.val_stride));
        result.trace.push_back(stats);
        spdlog::debug("epoch {} mse {:.6g} autocon {:.6g} val {:.6g}", epoch, stats.mse, stats.autocon, stats.val_mse);

        if (stats.val_mse < best_val) {
            best_val = stats.val_mse;
            best = params;
            result.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }

    result.params = best;
    result.test = evaluate_segment(result.params, data, data.split.test);
    result.test.config = config_echo(config);
    result.test.config_hash = result.config_hash;

    if (write_artifacts) {
        const std::filesystem::path dir = config.output_dir;
        std::filesystem::create_directories(dir);
        const auto& hash = result.config_hash;

        std::ostringstream rng_state;
        rng_state << rng;
        save_checkpoint(dir / "checkpoint.txt", Checkpoint{result.params, config_echo(config), hash, rng_state.str()});

        std::string echo;
        for (const auto& [k, v] : config_echo(config)) echo += k + " = " + v + "\n";
        write_text_atomic(dir / "config.txt", with_hash(hash, echo));
        write_text_atomic(dir / "split_manifest.txt", with_hash(hash, split_manifest_text(data.split)));
        write_text_atomic(dir / "loss_trace.csv", with_hash(hash, loss_trace_csv(result.trace)));
        write_text_atomic(dir / "acf.csv", with_hash(hash, acf_csv(result.acf, data.series->channel_names)));
        write_text_atomic(dir / "eval_horizon.csv", with_hash(hash, horizon_csv(result.test)));
        write_text_atomic(dir / "eval_windows.csv", with_hash(hash, window_csv(result.test)));
        write_text_atomic(dir / "eval_summary.txt", summary_text(result.test));
        if (mc.use_long) {
            const auto train_starts = data.split.train.window_starts(data.spec);
            const auto rows = repr_similarity(result.params, data, data.segment("all"), train_starts.front(), 0,
                                              config.repr_smooth_k);
            write_text_atomic(dir / "repr_sim.csv", with_hash(hash, repr_sim_csv(rows)));
        }
    }
    return result;
}

}  // namespace autocon
