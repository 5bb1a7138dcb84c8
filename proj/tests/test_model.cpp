#include "autocon/errors.hpp"
#include "autocon/gradcheck.hpp"
#include "autocon/model.hpp"
#include "autocon/ops.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>

using namespace autocon;
using autocon::testing::check_close;
using autocon::testing::random_tensor;

namespace {

/// Two-channel random walk, long enough for a handful of windows.
Series walk_series(std::size_t length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, 1.0);
    Tensor values({length, 2});
    double a = 0.0, b = 5.0;
    for (std::size_t t = 0; t < length; ++t) {
        a += step(rng);
        b += 0.5 * step(rng);
        values.data[t * 2] = a;
        values.data[t * 2 + 1] = b;
    }
    return make_series("walk", std::move(values));
}

ModelConfig small_config(std::size_t I = 8, std::size_t O = 6) {
    ModelConfig cfg;
    cfg.input = I;
    cfg.output = O;
    cfg.width = 4;
    cfg.depth = 2;
    cfg.ma_kernels = {1, 3, 5};
    return cfg;
}

std::vector<ForwardOutput> run_forward(ModelParams& params, const WindowBatch& batch) {
    Tape tape;
    return per_window(forward(tape, params, batch));
}

}  // namespace

TEST_CASE("inputs are centred per window and channel") {
    const auto series = make_series("s", Tensor({4, 1}, {1.0, 2.0, 3.0, 10.0}));
    const std::vector<std::size_t> starts{0};
    const auto batch = make_batch(series, WindowSpec{3, 1}, starts);
    check_close(normalize_inputs(batch).data, {-1.0, 0.0, 1.0});

    const auto flat = make_series("flat", Tensor({4, 1}, {7.0, 7.0, 7.0, 7.0}));
    check_close(normalize_inputs(make_batch(flat, WindowSpec{3, 1}, starts)).data, {0.0, 0.0, 0.0});
}

TEST_CASE("zero parameters forecast the input mean") {
    const auto series = walk_series(60, 3);
    const auto cfg = small_config();
    auto params = ModelParams::zeros(cfg);
    const std::vector<std::size_t> starts{0, 7, 30};
    const auto batch = make_batch(series, WindowSpec{cfg.input, cfg.output}, starts);
    const auto out = run_forward(params, batch);
    for (std::size_t n = 0; n < starts.size(); ++n) {
        for (std::size_t ch = 0; ch < 2; ++ch) {
            double mean = 0.0;
            for (std::size_t t = 0; t < cfg.input; ++t) mean += series.at(starts[n] + t, ch);
            mean /= static_cast<double>(cfg.input);
            for (std::size_t h = 0; h < cfg.output; ++h) CHECK(out[n].pred.data[h * 2 + ch] == doctest::Approx(mean).epsilon(1e-14));
        }
    }
}

TEST_CASE("prediction is the sum of the branches plus the input mean") {
    const auto series = walk_series(80, 5);
    const std::vector<std::size_t> starts{2, 11, 40, 60};
    for (const auto [use_short, use_long] : {std::pair{true, true}, std::pair{true, false}, std::pair{false, true}}) {
        auto cfg = small_config();
        cfg.use_short = use_short;
        cfg.use_long = use_long;
        auto params = ModelParams::init(cfg, 17);
        const auto batch = make_batch(series, WindowSpec{cfg.input, cfg.output}, starts);
        const auto out = run_forward(params, batch);
        for (std::size_t n = 0; n < starts.size(); ++n) {
            for (std::size_t i = 0; i < out[n].pred.size(); ++i) {
                const std::size_t ch = i % 2;
                const double mean = batch.input_mean.data[n * 2 + ch];
                const double want = out[n].short_term.data[i] + out[n].long_term.data[i] + mean;
                CHECK(out[n].pred.data[i] == doctest::Approx(want).epsilon(1e-13));
            }
            const double short_norm = std::inner_product(out[n].short_term.data.begin(), out[n].short_term.data.end(),
                                                         out[n].short_term.data.begin(), 0.0);
            const double long_norm = std::inner_product(out[n].long_term.data.begin(), out[n].long_term.data.end(),
                                                        out[n].long_term.data.begin(), 0.0);
            CHECK((short_norm > 0.0) == use_short);
            CHECK((long_norm > 0.0) == use_long);
        }
    }
}

TEST_CASE("short branch with identity weights copies the input when I equals O") {
    auto cfg = small_config(5, 5);
    cfg.use_long = false;
    auto params = ModelParams::zeros(cfg);
    for (std::size_t i = 0; i < 5; ++i) params.short_weight.value.data[i * 5 + i] = 1.0;
    const auto series = walk_series(30, 9);
    const std::vector<std::size_t> starts{0, 13};
    const auto out = run_forward(params, make_batch(series, WindowSpec{5, 5}, starts));
    for (std::size_t n = 0; n < starts.size(); ++n)
        for (std::size_t t = 0; t < 5; ++t)
            for (std::size_t ch = 0; ch < 2; ++ch)
                CHECK(out[n].pred.data[t * 2 + ch] == doctest::Approx(series.at(starts[n] + t, ch)).epsilon(1e-13));
}

TEST_CASE("short branch matches a hand-written linear forecaster") {
    auto cfg = small_config(6, 4);
    cfg.use_long = false;
    auto params = ModelParams::init(cfg, 99);
    const auto series = walk_series(40, 21);
    const std::vector<std::size_t> starts{4, 20};
    const auto out = run_forward(params, make_batch(series, WindowSpec{6, 4}, starts));
    const auto& W = params.short_weight.value.data;
    for (std::size_t n = 0; n < starts.size(); ++n)
        for (std::size_t ch = 0; ch < 2; ++ch) {
            double mean = 0.0;
            for (std::size_t t = 0; t < 6; ++t) mean += series.at(starts[n] + t, ch);
            mean /= 6.0;
            for (std::size_t h = 0; h < 4; ++h) {
                double want = mean;
                for (std::size_t t = 0; t < 6; ++t) want += W[h * 6 + t] * (series.at(starts[n] + t, ch) - mean);
                CHECK(out[n].pred.data[h * 2 + ch] == doctest::Approx(want).epsilon(1e-13));
            }
        }
}

TEST_CASE("encoder without blocks and zero input gives zero representations") {
    auto cfg = small_config();
    cfg.depth = 0;
    auto params = ModelParams::init(cfg, 4);
    for (auto& v : params.input_bias.value.data) v = 0.0;
    Tape tape;
    const auto x = tape.constant(Tensor({2, cfg.input, 1}));
    const auto v = encode(tape, params, x, Value{});
    CHECK(v.shape() == Shape{2, cfg.input, cfg.width});
    for (const double e : v.data()) CHECK(e == 0.0);
}

TEST_CASE("encoder is causal in time") {
    auto cfg = small_config(16, 4);
    cfg.depth = 3;
    auto params = ModelParams::init(cfg, 8);
    std::mt19937_64 rng(1);
    const Tensor base = random_tensor({1, 16, 1}, rng);
    Tape t0;
    const auto v0 = encode(t0, params, t0.constant(base), Value{}).tensor();
    for (const std::size_t p : {0UL, 5UL, 11UL, 15UL}) {
        Tensor bumped = base;
        bumped.data[p] += 0.75;
        Tape t1;
        const auto v1 = encode(t1, params, t1.constant(bumped), Value{}).tensor();
        const std::size_t d = cfg.width;
        bool later_changed = false;
        for (std::size_t t = 0; t < 16; ++t)
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = std::abs(v1.data[t * d + j] - v0.data[t * d + j]);
                if (t < p) CHECK(diff == 0.0);
                if (t >= p && diff > 0.0) later_changed = true;
            }
        CHECK(later_changed);
    }
}

TEST_CASE("forecasts shift with a constant offset of the input") {
    auto cfg = small_config();
    cfg.features = 0;
    auto params = ModelParams::init(cfg, 12);
    const auto series = walk_series(50, 2);
    Tensor shifted = series.values;
    for (std::size_t t = 0; t < series.length(); ++t) shifted.data[t * 2] += 123.5;
    const auto moved = make_series("moved", shifted);
    const std::vector<std::size_t> starts{0, 10, 25};
    const WindowSpec spec{cfg.input, cfg.output};
    const auto a = run_forward(params, make_batch(series, spec, starts));
    const auto b = run_forward(params, make_batch(moved, spec, starts));
    for (std::size_t n = 0; n < starts.size(); ++n)
        for (std::size_t h = 0; h < cfg.output; ++h) {
            CHECK(std::abs(b[n].pred.data[h * 2] - a[n].pred.data[h * 2] - 123.5) < 1e-9);
            CHECK(std::abs(b[n].pred.data[h * 2 + 1] - a[n].pred.data[h * 2 + 1]) < 1e-12);
        }
}

TEST_CASE("decoder smooths the MLP output with averaged moving averages") {
    ModelConfig cfg;
    cfg.input = 4;
    cfg.output = 4;
    cfg.width = 1;
    cfg.depth = 0;
    cfg.ma_kernels = {1, 3};
    auto params = ModelParams::zeros(cfg);
    for (std::size_t i = 0; i < 4; ++i) params.time_weight.value.data[i * 4 + i] = 1.0;
    params.channel_weight.value.data[0] = 0.1;
    // gelu is the identity to within 1e-20 at these magnitudes, so the MLP emits [1, 2, 3, 4].
    Tape tape;
    const auto v = tape.constant(Tensor({1, 4, 1}, {10.0, 20.0, 30.0, 40.0}));
    check_close(decode_long(tape, params, v).data(), {7.0 / 6.0, 2.0, 3.0, 23.0 / 6.0}, 1e-12);
}

TEST_CASE("decoder preserves a constant MLP output") {
    ModelConfig cfg = small_config(8, 9);
    cfg.ma_kernels = {3, 5, 9};
    auto params = ModelParams::zeros(cfg);
    params.channel_bias.value.data[0] = 2.5;
    Tape tape;
    std::mt19937_64 rng(3);
    const auto v = tape.constant(random_tensor({3, 8, cfg.width}, rng));
    for (const double e : decode_long(tape, params, v).data()) CHECK(e == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("model configuration is validated") {
    auto cfg = small_config();
    cfg.ma_kernels = {3, 4};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.ma_kernels.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.use_short = cfg.use_long = false;
    CHECK_THROWS_AS((void)ModelParams::init(cfg, 1), ConfigError);
    cfg = small_config();
    cfg.input = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("forward rejects batches that do not match the model") {
    const auto cfg = small_config();
    auto params = ModelParams::init(cfg, 1);
    const auto series = walk_series(40, 1);
    const std::vector<std::size_t> starts{0};
    Tape tape;
    CHECK_THROWS_AS((void)forward(tape, params, make_batch(series, WindowSpec{cfg.input + 1, cfg.output}, starts)),
                    DimensionError);
    TimeFeatureOptions clock{10.0};
    CHECK_THROWS_AS((void)forward(tape, params, make_batch(series, WindowSpec{cfg.input, cfg.output}, starts, clock)),
                    DimensionError);
}

TEST_CASE("checkpoints round trip bitwise") {
    auto cfg = small_config();
    cfg.features = 2;
    Checkpoint ck{ModelParams::init(cfg, 77), {{"lambda", "0.1"}, {"seed", "5"}}, "00ff00ff00ff00ff", "state 1 2 3"};
    ck.params.short_weight.value.data[0] = 1.0 / 3.0;
    ck.params.input_bias.value.data[1] = -0.0;
    const auto path = std::filesystem::temp_directory_path() / "autocon_model_ckpt.txt";
    save_checkpoint(path, ck);
    const auto back = load_checkpoint(path);
    std::filesystem::remove(path);

    CHECK(back.config == ck.config);
    CHECK(back.config_hash == ck.config_hash);
    CHECK(back.rng_state == ck.rng_state);
    CHECK(back.params.config.features == 2);
    CHECK(back.params.config.ma_kernels == cfg.ma_kernels);
    const auto a = ck.params.list();
    const auto b = back.params.list();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i]->name == b[i]->name);
        CHECK(a[i]->value.shape == b[i]->value.shape);
        CHECK(std::memcmp(a[i]->value.data.data(), b[i]->value.data.data(), a[i]->value.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("loading a damaged checkpoint fails") {
    const auto path = std::filesystem::temp_directory_path() / "autocon_bad_ckpt.txt";
    {
        std::ofstream out(path);
        out << "not a checkpoint\n";
    }
    CHECK_THROWS_AS((void)load_checkpoint(path), DataError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS((void)load_checkpoint(path), DataError);
}

TEST_CASE("total loss without the contrastive term is the forecast MSE") {
    const auto series = walk_series(80, 7);
    const auto cfg = small_config();
    auto params = ModelParams::init(cfg, 5);
    const std::vector<std::size_t> starts{0, 9, 33, 50};
    const auto batch = make_batch(series, WindowSpec{cfg.input, cfg.output}, starts);
    const std::vector<Tensor> relations(2, Tensor({4, 4}, {1, 0.5, 0.2, 0.1, 0.5, 1, 0.3, 0.2, 0.2, 0.3, 1, 0.6, 0.1, 0.2, 0.6, 1}));
    Tape tape;
    const auto fr = forward(tape, params, batch);
    const auto loss = total_loss(fr, batch, relations, 0.0, 1.0);
    const auto pred = fr.pred.data();
    const auto target = fold_targets(batch);
    double want = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) want += (pred[i] - target.data[i]) * (pred[i] - target.data[i]);
    want /= static_cast<double>(target.size());
    CHECK(loss.mse == doctest::Approx(want).epsilon(1e-14));
    CHECK(loss.total.item() == doctest::Approx(want).epsilon(1e-14));
    CHECK(loss.autocon > 0.0);

    Tape tape2;
    const auto with = total_loss(forward(tape2, params, batch), batch, relations, 0.3, 1.0);
    CHECK(with.total.item() == doctest::Approx(loss.mse + 0.3 * loss.autocon).epsilon(1e-13));
}

TEST_CASE("a perfect forecast on a two-window batch has zero loss") {
    auto cfg = small_config(5, 5);
    cfg.use_long = false;
    auto params = ModelParams::zeros(cfg);
    for (std::size_t i = 0; i < 5; ++i) params.short_weight.value.data[i * 5 + i] = 1.0;
    // Period-5 series: the target equals the input window.
    Tensor values({40, 1});
    for (std::size_t t = 0; t < 40; ++t) values.data[t] = std::sin(2.0 * M_PI * static_cast<double>(t % 5) / 5.0) + 0.3;
    const auto series = make_series("p5", values);
    const std::vector<std::size_t> starts{0, 15};
    const auto batch = make_batch(series, WindowSpec{5, 5}, starts);
    Tape tape;
    const auto loss = total_loss(forward(tape, params, batch), batch, {Tensor({2, 2}, {1, 0.4, 0.4, 1})}, 0.5, 1.0);
    CHECK(loss.mse < 1e-28);
    CHECK(loss.autocon == 0.0);
    CHECK(loss.total.item() < 1e-28);
}

TEST_CASE("full loss gradients match finite differences") {
    auto cfg = small_config(6, 5);
    cfg.features = 2;
    auto params = ModelParams::init(cfg, 31);
    const auto series = walk_series(60, 13);
    const std::vector<std::size_t> starts{0, 6, 19, 33};
    const auto batch = make_batch(series, WindowSpec{6, 5}, starts, TimeFeatureOptions{12.0});
    const Tensor rel({4, 4}, {1, 0.7, 0.2, 0.2, 0.7, 1, 0.5, 0.1, 0.2, 0.5, 1, 0.9, 0.2, 0.1, 0.9, 1});
    const std::vector<Tensor> relations{rel, rel};
    const auto list = params.list();
    const auto outcome = finite_difference_check(
        [&](Tape& tape) { return total_loss(forward(tape, params, batch), batch, relations, 0.4, 0.5).total; }, list);
    CHECK(outcome.max_rel_error < 1e-4);
}

TEST_CASE("zero-model forecast error on a hand example") {
    auto cfg = small_config(4, 2);
    auto params = ModelParams::zeros(cfg);
    const auto series = make_series("hand", Tensor({6, 1}, {1.0, 2.0, 4.0, 3.0, 5.0, 0.0}));
    const std::vector<std::size_t> starts{0};
    const auto batch = make_batch(series, WindowSpec{4, 2}, starts);
    Tape tape;
    const auto loss = total_loss(forward(tape, params, batch), batch, {Tensor({1, 1}, {1.0})}, 0.0, 1.0);
    CHECK(loss.mse == doctest::Approx(6.25).epsilon(1e-15));
}
