// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset, e.g. `acceptance 3 4`.

#include "autocon/autocon_loss.hpp"
#include "autocon/autocorr.hpp"
#include "autocon/errors.hpp"
#include "autocon/metrics.hpp"
#include "autocon/model.hpp"
#include "autocon/ops.hpp"
#include "autocon/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>

using namespace autocon;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Tensor uniform(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = u(rng);
    return t;
}

// 1 ------------------------------------------------------------------------

Outcome gradient_suite() {
    const auto t0 = Clock::now();
    const auto entries = run_gradcheck(10, 1e-4, 1);
    const double secs = seconds_since(t0);
    double worst = 0.0;
    std::string worst_name, failed;
    for (const auto& e : entries) {
        if (e.max_rel_error >= worst) {
            worst = e.max_rel_error;
            worst_name = e.name;
        }
        if (!e.passed) failed += " " + e.name;
    }
    const bool pass = failed.empty() && secs < 120.0;
    return {pass, fmt("%zu checks x 10 seeds, worst rel err %.2e (%s)%s, %.1f s (limit 120 s)", entries.size(), worst,
                      worst_name.c_str(), failed.empty() ? "" : (", failed:" + failed).c_str(), secs)};
}

// 2 ------------------------------------------------------------------------

Outcome acf_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 1.0);
    double worst = 0.0;
    std::size_t series_count = 0;
    for (const std::size_t T : {2UL, 3UL, 17UL, 64UL, 255UL, 1000UL, 1024UL, 2049UL, 4096UL}) {
        for (int kind = 0; kind < 3; ++kind) {
            std::vector<double> x(T);
            double walk = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                walk += noise(rng);
                const double td = static_cast<double>(t);
                x[t] = kind == 0 ? noise(rng) : kind == 1 ? walk : std::sin(2.0 * M_PI * td / 37.0) + 0.3 * noise(rng) + 5.0;
            }
            const auto fast = sample_acf(x, T - 1, AcfMethod::fft);
            const auto slow = sample_acf(x, T - 1, AcfMethod::direct);
            for (std::size_t h = 0; h < T; ++h) worst = std::max(worst, std::abs(fast[h] - slow[h]));
            ++series_count;
        }
    }
    std::string misses;
    for (const std::size_t p : {4UL, 6UL, 7UL, 12UL, 24UL, 50UL, 100UL, 168UL}) {
        const std::size_t T = 20 * p;
        std::vector<double> x(T);
        for (std::size_t t = 0; t < T; ++t) x[t] = std::sin(2.0 * M_PI * static_cast<double>(t) / static_cast<double>(p));
        const auto acf = sample_acf(x, p + p / 2);
        const double lag = static_cast<double>(strongest_lag(acf));
        const double pd = static_cast<double>(p);
        if (std::abs(lag - pd) > 1.0 && std::abs(lag - pd / 2.0) > 1.0) misses += fmt(" p=%zu->%g", p, lag);
    }
    const double secs = seconds_since(t0);
    const bool pass = worst <= 1e-8 && misses.empty() && secs < 60.0;
    return {pass, fmt("fft vs direct max |diff| %.2e over %zu series (T<=4096, all lags); period recovery %s; %.1f s",
                      worst, series_count, misses.empty() ? "8/8" : ("missed" + misses).c_str(), secs)};
}

// 3 ------------------------------------------------------------------------

Tensor random_similarity(std::size_t n, std::mt19937_64& rng) {
    Tensor s = uniform({n, n}, rng);
    for (std::size_t i = 0; i < n; ++i) {
        s.data[i * n + i] = 1.0;
        for (std::size_t j = 0; j < i; ++j) s.data[i * n + j] = s.data[j * n + i];
    }
    return s;
}

Tensor random_relations(std::size_t n, std::mt19937_64& rng, bool grid) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> level(0, 4);
    Tensor r({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        r.data[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) r.data[i * n + j] = r.data[j * n + i] = grid ? level(rng) / 4.0 : u(rng);
    }
    return r;
}

double vectorized_loss(const Tensor& sim, const Tensor& rel, double tau) {
    Tape tape;
    return autocon_loss_from_similarity(tape.constant(sim), rel, tau).item();
}

Outcome autocon_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(2, 16);
    std::uniform_real_distribution<double> temp(0.05, 2.0);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const std::size_t n = size(rng);
        const auto sim = random_similarity(n, rng);
        const auto rel = random_relations(n, rng, draw % 2 == 1);
        const double tau = temp(rng);
        worst = std::max(worst, std::abs(vectorized_loss(sim, rel, tau) - autocon_loss_oracle(sim, rel, tau)));
    }
    bool two_zero = true;
    for (int trial = 0; trial < 20; ++trial) {
        two_zero = two_zero && vectorized_loss(random_similarity(2, rng), random_relations(2, rng, false), 0.7) == 0.0;
    }
    Tensor zero_rel({6, 6});
    for (std::size_t i = 0; i < 6; ++i) zero_rel.data[i * 6 + i] = 1.0;
    const bool zero_r = vectorized_loss(random_similarity(6, rng), zero_rel, 1.0) == 0.0;
    const Tensor sim3({3, 3}, {1, .9, .1, .9, 1, .5, .1, .5, 1});
    const Tensor rel3({3, 3}, {1, .8, .2, .8, 1, .5, .2, .5, 1});
    const double hand = vectorized_loss(sim3, rel3, 1.0);
    const bool pass = worst <= 1e-10 && two_zero && zero_r && std::abs(hand - 0.1606) <= 1e-3;
    return {pass, fmt("100 draws N in [2,16], max |vectorized - triple loop| %.2e; N=2 zero: %s; zero r: %s; N=3 hand %.6f",
                      worst, two_zero ? "yes" : "no", zero_r ? "yes" : "no", hand)};
}

// 4 ------------------------------------------------------------------------

double exhaustive_dtw(const std::vector<double>& a, const std::vector<double>& b, std::size_t i, std::size_t j) {
    const double here = (a[i] - b[j]) * (a[i] - b[j]);
    if (i + 1 == a.size() && j + 1 == b.size()) return here;
    double best = std::numeric_limits<double>::infinity();
    if (i + 1 < a.size() && j + 1 < b.size()) best = std::min(best, exhaustive_dtw(a, b, i + 1, j + 1));
    if (i + 1 < a.size()) best = std::min(best, exhaustive_dtw(a, b, i + 1, j));
    if (j + 1 < b.size()) best = std::min(best, exhaustive_dtw(a, b, i, j + 1));
    return here + best;
}

Outcome dtw_oracle() {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> level(-3, 3);
    std::size_t pairs = 0, mismatches = 0;
    for (std::size_t n = 1; n <= 8; ++n)
        for (std::size_t m = 1; m <= 8; ++m)
            for (int rep = 0; rep < 4; ++rep) {
                // Integer levels keep every cost exact in floating point, so equality is exact.
                std::vector<double> a(n), b(m);
                for (auto& v : a) v = rep % 2 ? level(rng) : level(rng) * 0.5;
                for (auto& v : b) v = rep % 2 ? level(rng) : level(rng) * 0.5;
                const auto al = dtw_align(a, b);
                double on_path = 0.0;
                for (const auto& [i, j] : al.path) on_path += (a[i] - b[j]) * (a[i] - b[j]);
                if (al.distance != exhaustive_dtw(a, b, 0, 0) || on_path != al.distance) ++mismatches;
                ++pairs;
            }
    bool vanish = true;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t L = 1 + static_cast<std::size_t>(rep % 24);
        const Tensor t = uniform({L, 1 + static_cast<std::size_t>(rep % 3)}, rng, -5.0, 5.0);
        vanish = vanish && shape_dtw(t, t) == 0.0 && temporal_dtw(t, t) == 0.0 && mse(t, t) == 0.0 && mae(t, t) == 0.0;
    }
    const bool pass = mismatches == 0 && vanish;
    return {pass, fmt("%zu/%zu sequence pairs (lengths 1..8 x 1..8) equal exhaustive enumeration; identical inputs give 0: %s",
                      pairs - mismatches, pairs, vanish ? "yes" : "no")};
}

// 5 ------------------------------------------------------------------------

Outcome structural() {
    std::string problems;

    std::size_t checked = 0;
    for (std::size_t T = 0; T <= 200; ++T)
        for (std::size_t I = 1; I <= 50; ++I)
            for (std::size_t O = 1; O <= 50; ++O) {
                std::size_t enumerated = 0;
                for (std::size_t s = 0; s + I + O <= T; ++s) ++enumerated;
                bool ok = false;
                try {
                    ok = window_count(T, I, O) == enumerated && enumerated > 0;
                } catch (const DomainError&) {
                    ok = enumerated == 0;
                }
                if (!ok && problems.size() < 200) problems += fmt(" count(T=%zu,I=%zu,O=%zu)", T, I, O);
                ++checked;
            }

    std::mt19937_64 rng(5);
    Tensor values = uniform({300, 2}, rng, -3.0, 3.0);
    for (std::size_t t = 0; t < 300; ++t) values.data[t * 2] += 1e4;
    const auto series = make_series("s", values);
    const std::vector<std::size_t> starts{0, 17, 101, 200};
    const WindowSpec spec{32, 16};
    const auto batch = make_batch(series, spec, starts, TimeFeatureOptions{50.0});
    const auto norm = normalize_inputs(batch);
    double round_trip = 0.0;
    for (std::size_t n = 0; n < starts.size(); ++n)
        for (std::size_t ch = 0; ch < 2; ++ch)
            for (std::size_t t = 0; t < spec.input; ++t) {
                const double back = norm.data[(n * 2 + ch) * spec.input + t] + batch.input_mean.data[n * 2 + ch];
                round_trip = std::max(round_trip, std::abs(back - series.at(starts[n] + t, ch)));
            }
    if (round_trip > 1e-9) problems += fmt(" round-trip %.2e", round_trip);

    ModelConfig mc;
    mc.input = spec.input;
    mc.output = spec.output;
    mc.features = 2;
    mc.width = 8;
    mc.depth = 3;
    mc.ma_kernels = {3, 7};
    auto params = ModelParams::init(mc, 3);
    Tensor shifted = values;
    for (auto& v : shifted.data) v += 250.0;
    const auto moved = make_series("moved", shifted);
    Tape ta, tb;
    const auto pa = forward(ta, params, batch).pred.tensor();
    const auto pb = forward(tb, params, make_batch(moved, spec, starts, TimeFeatureOptions{50.0})).pred.tensor();
    double shift_err = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) shift_err = std::max(shift_err, std::abs(pb.data[i] - pa.data[i] - 250.0));
    if (shift_err > 1e-9) problems += fmt(" shift %.2e", shift_err);

    const Tensor x = uniform({1, spec.input, 1}, rng);
    const Tensor feats = uniform({1, spec.input, 2}, rng);
    Tape t0;
    const auto v0 = encode(t0, params, t0.constant(x), t0.constant(feats)).tensor();
    std::size_t causal_violations = 0;
    for (std::size_t p = 0; p < spec.input; ++p) {
        Tensor bumped = x;
        bumped.data[p] += 1.0;
        Tape t1;
        const auto v1 = encode(t1, params, t1.constant(bumped), t1.constant(feats)).tensor();
        for (std::size_t t = 0; t < p; ++t)
            for (std::size_t j = 0; j < mc.width; ++j)
                if (v1.data[t * mc.width + j] != v0.data[t * mc.width + j]) ++causal_violations;
    }
    if (causal_violations) problems += fmt(" causality %zu", causal_violations);

    RunConfig rc;
    rc.synth = SynthSpec{{{48.0, 1.0}}, 0.0, 0.1, 500, 1};
    rc.input = 24;
    rc.output = 12;
    rc.width = 4;
    rc.depth = 1;
    rc.kernels = {3};
    rc.epochs = 3;
    rc.iters_per_epoch = 2;
    rc.batch = 8;
    rc.val_stride = 8;
    const auto run = train(rc, false);
    if (run.acf_computations != 1) problems += fmt(" acf computed %zu times", run.acf_computations);

    const bool pass = problems.empty();
    return {pass, fmt("window_count %zu (T<=200, I,O<=50) combos, domain error when T<I+O; round trip err %.1e; shift err %.1e; causal violations %zu; "
                      "ACF computations per run %zu%s",
                      checked, round_trip, shift_err, causal_violations, run.acf_computations,
                      problems.empty() ? "" : (";" + problems).c_str())};
}

// 6 and 7 ----------------------------------------------------------------

RunConfig experiment_config(std::uint64_t seed, double lambda) {
    RunConfig c;
    c.synth = SynthSpec{{{1000.0, 1.0}, {24.0, 0.5}}, 0.0, 0.1, 4000, seed};
    c.input = 48;
    c.output = 96;
    c.width = 16;
    c.depth = 2;
    c.period_hint = 1000.0;
    c.epochs = 10;
    c.patience = 3;
    c.batch = 32;
    c.lr = 1e-3;
    c.val_stride = 4;
    c.lambda = lambda;
    c.seed = seed;
    return c;
}

struct SeedRun {
    double test_mse = 0.0;
    double early_mse = 0.0;  ///< horizons 1..24
    double late_mse = 0.0;   ///< horizons 73..96
    double sim_in_phase = 0.0;
    double sim_quarter = 0.0;
};

/// Median cosine similarity of pooled representations for window pairs whose
/// start distance is 0 and 250 modulo 1000, over the whole series.
std::pair<double, double> phase_similarity(const TrainResult& r, const RunConfig& c) {
    const auto data = load_run_data(c);
    const auto starts = data.segment("all").window_starts(data.spec);
    auto params = r.params;
    const Tensor reps = pooled_representations(params, data, starts, 0);
    const std::size_t d = params.config.width;
    std::vector<double> in_phase, quarter;
    for (std::size_t i = 0; i < starts.size(); i += 3)
        for (std::size_t j = i + 1; j < starts.size(); ++j) {
            const std::size_t lag = (starts[j] - starts[i]) % 1000;
            if (lag != 0 && lag != 250) continue;
            double ab = 0.0, aa = 0.0, bb = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double a = reps.data[i * d + k], b = reps.data[j * d + k];
                ab += a * b;
                aa += a * a;
                bb += b * b;
            }
            const double sim = ab / ((std::sqrt(aa) + 1e-12) * (std::sqrt(bb) + 1e-12));
            (lag == 0 ? in_phase : quarter).push_back(sim);
        }
    return {median(in_phase), median(quarter)};
}

std::vector<SeedRun> run_seeds(double lambda, bool no_short, bool no_long, bool similarity) {
    std::vector<SeedRun> out;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto c = experiment_config(seed, lambda);
        c.no_short = no_short;
        c.no_long = no_long;
        const auto r = train(c, false);
        SeedRun s;
        s.test_mse = r.test.aggregate.mse;
        s.early_mse = horizon_range_mse(r.test, 0, 24);
        s.late_mse = horizon_range_mse(r.test, 72, 96);
        if (similarity) std::tie(s.sim_in_phase, s.sim_quarter) = phase_similarity(r, c);
        out.push_back(s);
    }
    return out;
}

double median_of(const std::vector<SeedRun>& runs, double SeedRun::*field) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.*field);
    return median(v);
}

struct Experiment {
    std::vector<SeedRun> plain, autocon;
    double seconds = 0.0;
    bool done = false;
};

Experiment& experiment() {
    static Experiment e;
    if (!e.done) {
        const auto t0 = Clock::now();
        e.plain = run_seeds(0.0, false, false, true);
        e.autocon = run_seeds(0.1, false, false, true);
        e.seconds = seconds_since(t0);
        e.done = true;
    }
    return e;
}

Outcome behavioral() {
    auto& e = experiment();
    const double mse0 = median_of(e.plain, &SeedRun::test_mse);
    const double mse1 = median_of(e.autocon, &SeedRun::test_mse);
    const double sim0 = median_of(e.autocon, &SeedRun::sim_in_phase);
    const double sim250 = median_of(e.autocon, &SeedRun::sim_quarter);
    const bool a = mse1 <= mse0;
    const bool b = sim0 > sim250;
    const bool pass = a && b && e.seconds < 900.0;
    std::string per_seed;
    for (std::size_t i = 0; i < e.plain.size(); ++i) {
        per_seed += fmt(" %zu:%.5f/%.5f", i + 1, e.autocon[i].test_mse, e.plain[i].test_mse);
    }
    return {pass, fmt("(a) %s median test MSE lambda=0.1 %.5f vs lambda=0 %.5f (per seed 0.1/0:%s); (b) %s median sim "
                      "lag%%1000=0 %.4f vs =250 %.4f (lambda=0: %.4f vs %.4f); 10 training runs %.0f s (limit 900 s)",
                      a ? "ok" : "FAILED", mse1, mse0, per_seed.c_str(), b ? "ok" : "FAILED", sim0, sim250,
                      median_of(e.plain, &SeedRun::sim_in_phase), median_of(e.plain, &SeedRun::sim_quarter), e.seconds)};
}

Outcome ablation() {
    auto& e = experiment();
    const auto t0 = Clock::now();
    const auto no_short = run_seeds(0.1, true, false, false);
    const auto no_long = run_seeds(0.1, false, true, false);
    const double full_early = median_of(e.autocon, &SeedRun::early_mse);
    const double full_late = median_of(e.autocon, &SeedRun::late_mse);
    const double ns_early = median_of(no_short, &SeedRun::early_mse);
    const double nl_late = median_of(no_long, &SeedRun::late_mse);
    const bool a = ns_early > full_early;
    const bool b = nl_late > full_late;
    return {a && b, fmt("horizons 1-24: w/o short %.5f vs full %.5f (%s); horizons 73-96: w/o long %.5f vs full %.5f (%s); "
                        "%.0f s",
                        ns_early, full_early, a ? "degraded" : "NOT degraded", nl_late, full_late,
                        b ? "degraded" : "NOT degraded", seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient suite", gradient_suite},
        {"ACF oracle", acf_oracle},
        {"AutoCon oracle", autocon_oracle},
        {"DTW oracle", dtw_oracle},
        {"structural properties", structural},
        {"behavioral experiment", behavioral},
        {"ablation structure", ablation},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!wanted.empty() && !wanted.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
