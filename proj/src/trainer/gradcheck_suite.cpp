#include "autocon/autocon_loss.hpp"
#include "autocon/errors.hpp"
#include "autocon/gradcheck.hpp"
#include "autocon/ops.hpp"
#include "autocon/trainer.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <sstream>

namespace autocon {
namespace {

using Rng = std::mt19937_64;

Tensor uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = u(rng);
    return t;
}

/// Random symmetric unit-diagonal relations on a 0.1 grid, so ties occur.
Tensor grid_relations(std::size_t n, Rng& rng) {
    std::uniform_int_distribution<int> level(0, 10);
    Tensor r({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        r.data[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) r.data[i * n + j] = r.data[j * n + i] = level(rng) / 10.0;
    }
    return r;
}

/// Inputs whose per-column maxima over time beat the runner-up by a margin.
Tensor separated_for_maxpool(Shape shape, Rng& rng) {
    while (true) {
        Tensor t = uniform(shape, rng);
        const std::size_t d = shape.back(), L = shape[shape.size() - 2];
        const std::size_t B = t.size() / (L * d);
        bool ok = true;
        for (std::size_t b = 0; b < B && ok; ++b)
            for (std::size_t j = 0; j < d && ok; ++j) {
                double top = -1e300, second = -1e300;
                for (std::size_t i = 0; i < L; ++i) {
                    const double v = t.data[(b * L + i) * d + j];
                    if (v > top) {
                        second = top;
                        top = v;
                    } else if (v > second) {
                        second = v;
                    }
                }
                ok = top - second > 1e-3;
            }
        if (ok) return t;
    }
}

/// Contracts an output with fixed random weights so every entry matters.
Value weighted(Tape& tape, const Value& y, Rng& rng) {
    return sum(mul(y, tape.constant(uniform(y.shape(), rng))));
}

using Check = std::function<GradcheckOutcome(Rng&)>;

GradcheckOutcome unary(Rng& rng, Shape shape, std::function<Value(const Value&)> op) {
    const auto w_seed = rng();
    return finite_difference_check(
        [&](Tape& tape, std::span<const Value> in) {
            Rng wr(w_seed);
            return weighted(tape, op(in[0]), wr);
        },
        {uniform(std::move(shape), rng)});
}

GradcheckOutcome binary(Rng& rng, Shape a, Shape b, std::function<Value(const Value&, const Value&)> op) {
    const auto w_seed = rng();
    return finite_difference_check(
        [&](Tape& tape, std::span<const Value> in) {
            Rng wr(w_seed);
            return weighted(tape, op(in[0], in[1]), wr);
        },
        {uniform(std::move(a), rng), uniform(std::move(b), rng)});
}

GradcheckOutcome full_loss(Rng& rng) {
    RunConfig cfg;
    cfg.synth = SynthSpec{{{50.0, 1.0}, {7.0, 0.5}}, 0.001, 0.1, 400, rng()};
    cfg.input = 8;
    cfg.output = 6;
    cfg.width = 4;
    cfg.depth = 2;
    cfg.kernels = {1, 3, 5};
    cfg.period_hint = 50.0;
    cfg.smoothing_k = 5;
    const RunData data = load_run_data(cfg);
    const auto acf = training_acf(cfg, data);
    const auto train_starts = data.split.train.window_starts(data.spec);
    std::vector<std::size_t> starts;
    std::uniform_int_distribution<std::size_t> pick(0, train_starts.size() - 1);
    for (int i = 0; i < 5; ++i) starts.push_back(train_starts[pick(rng)]);
    const auto batch = make_batch(*data.series, data.spec, starts, data.features);
    std::vector<Tensor> relations;
    for (std::size_t ch = 0; ch < acf.channels(); ++ch) relations.push_back(relation_matrix(acf, starts, ch));

    auto params = ModelParams::init(model_config(cfg, time_feature_count(*data.series, data.features)), rng());
    const auto list = params.list();
    return finite_difference_check(
        [&](Tape& tape) { return total_loss(forward(tape, params, batch), batch, relations, 0.5, 0.7).total; }, list);
}

const std::vector<std::pair<std::string, Check>>& registry() {
    static const std::vector<std::pair<std::string, Check>> checks = {
        {"matmul", [](Rng& r) { return binary(r, {3, 4}, {4, 2}, matmul); }},
        {"matmul_batched_left", [](Rng& r) { return binary(r, {2, 3, 4}, {4, 2}, matmul); }},
        {"matmul_batched_right", [](Rng& r) { return binary(r, {3, 4}, {2, 4, 2}, matmul); }},
        {"matmul_batched_both", [](Rng& r) { return binary(r, {2, 3, 4}, {2, 4, 2}, matmul); }},
        {"transpose", [](Rng& r) { return unary(r, {2, 3, 4}, transpose); }},
        {"add", [](Rng& r) { return binary(r, {3, 4}, {3, 4}, add); }},
        {"sub", [](Rng& r) { return binary(r, {3, 4}, {3, 4}, sub); }},
        {"mul", [](Rng& r) { return binary(r, {3, 4}, {3, 4}, mul); }},
        {"scale", [](Rng& r) { return unary(r, {3, 4}, [](const Value& x) { return scale(x, -1.7); }); }},
        {"add_bias", [](Rng& r) { return binary(r, {2, 3, 4}, {4}, add_bias); }},
        {"gelu", [](Rng& r) { return unary(r, {3, 5}, gelu); }},
        {"conv1d_causal", [](Rng& r) {
             return binary(r, {2, 7, 3}, {3, 3, 2}, [](const Value& x, const Value& k) { return conv1d_causal(x, k, 1); });
         }},
        {"conv1d_causal_dilated", [](Rng& r) {
             return binary(r, {2, 9, 2}, {3, 2, 3}, [](const Value& x, const Value& k) { return conv1d_causal(x, k, 2); });
         }},
        {"replicate_pad", [](Rng& r) { return unary(r, {2, 5, 3}, [](const Value& x) { return replicate_pad(x, 2, 3); }); }},
        {"avgpool1d", [](Rng& r) { return unary(r, {2, 6, 3}, [](const Value& x) { return avgpool1d(x, 3); }); }},
        {"max_pool_time", [](Rng& r) {
             const auto w_seed = r();
             return finite_difference_check(
                 [&](Tape& tape, std::span<const Value> in) {
                     Rng wr(w_seed);
                     return weighted(tape, max_pool_time(in[0]), wr);
                 },
                 {separated_for_maxpool({3, 6, 4}, r)});
         }},
        {"l2_normalize", [](Rng& r) { return unary(r, {3, 4}, l2_normalize); }},
        {"cosine_sim", [](Rng& r) { return binary(r, {5}, {5}, cosine_sim); }},
        {"cosine_sim_matrix", [](Rng& r) { return unary(r, {4, 3}, cosine_sim_matrix); }},
        {"reshape", [](Rng& r) { return unary(r, {2, 6}, [](const Value& x) { return reshape(x, {3, 4}); }); }},
        {"select_rows", [](Rng& r) {
             return unary(r, {4, 3}, [](const Value& x) { return select_rows(x, {2, 0, 2, 3}); });
         }},
        {"concat_last", [](Rng& r) { return binary(r, {2, 3, 2}, {2, 3, 4}, concat_last); }},
        {"sum", [](Rng& r) { return unary(r, {3, 4}, sum); }},
        {"mean", [](Rng& r) { return unary(r, {3, 4}, mean); }},
        {"mse_loss", [](Rng& r) { return binary(r, {3, 4}, {3, 4}, mse_loss); }},
        {"autocon_loss", [](Rng& r) {
             const Tensor rel = grid_relations(6, r);
             return finite_difference_check(
                 [&](Tape&, std::span<const Value> in) { return autocon_loss(in[0], rel, 0.5); }, {uniform({6, 4}, r)});
         }},
        {"autocon_loss_channels", [](Rng& r) {
             const std::vector<Tensor> rel{grid_relations(4, r), grid_relations(4, r)};
             return finite_difference_check(
                 [&](Tape&, std::span<const Value> in) { return autocon_loss_channels(in[0], rel, 1.0); },
                 {uniform({8, 3}, r)});
         }},
        {"full_loss", full_loss},
    };
    return checks;
}

}  // namespace

std::vector<std::string> gradcheck_names() {
    std::vector<std::string> out;
    for (const auto& [name, check] : registry()) out.push_back(name);
    return out;
}

std::vector<GradcheckEntry> run_gradcheck(std::size_t seeds, double tolerance, std::uint64_t base_seed) {
    std::vector<GradcheckEntry> out;
    for (std::size_t c = 0; c < registry().size(); ++c) {
        const auto& [name, check] = registry()[c];
        GradcheckEntry entry{name, 0.0, 0, true};
        for (std::size_t s = 0; s < seeds; ++s) {
            Rng rng(base_seed * 1000003ULL + c * 7919ULL + s);
            entry.max_rel_error = std::max(entry.max_rel_error, check(rng).max_rel_error);
            ++entry.trials;
        }
        entry.passed = entry.max_rel_error < tolerance;
        out.push_back(entry);
    }
    return out;
}

std::string gradcheck_csv(const std::vector<GradcheckEntry>& entries) {
    std::ostringstream os;
    os.precision(6);
    os << "op,max_rel_error,trials,passed\n";
    for (const auto& e : entries) os << e.name << ',' << e.max_rel_error << ',' << e.trials << ',' << (e.passed ? 1 : 0) << '\n';
    return os.str();
}

}  // namespace autocon
