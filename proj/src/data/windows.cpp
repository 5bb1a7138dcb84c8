#include "autocon/data.hpp"

#include "autocon/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

namespace autocon {
namespace {

double scaled(double value, double max_value) { return value / max_value - 0.5; }

bool sub_hourly(Frequency f) { return f == Frequency::min10 || f == Frequency::min15; }

bool calendar(const Series& s) { return s.has_timestamps() && s.freq != Frequency::none; }

}  // namespace

std::size_t time_feature_count(const Series& series, const TimeFeatureOptions& options) {
    if (calendar(series)) return sub_hourly(series.freq) ? 5 : 4;
    return options.period_hint > 0.0 ? 2 : 0;
}

Tensor time_features(const Series& series, std::span<const std::size_t> indices, const TimeFeatureOptions& options) {
    const std::size_t f = time_feature_count(series, options);
    Tensor out({indices.size(), f});
    if (f == 0) return out;

    if (calendar(series)) {
        using namespace std::chrono;
        for (std::size_t i = 0; i < indices.size(); ++i) {
            const sys_seconds ts{seconds{series.timestamps.at(indices[i])}};
            const auto day_point = floor<days>(ts);
            const year_month_day ymd{day_point};
            const weekday wd{day_point};
            const auto secs_of_day = (ts - day_point).count();
            double* row = out.data.data() + i * f;
            row[0] = scaled(static_cast<double>(static_cast<unsigned>(ymd.month()) - 1), 11.0);
            row[1] = scaled(static_cast<double>(static_cast<unsigned>(ymd.day()) - 1), 30.0);
            row[2] = scaled(static_cast<double>(wd.iso_encoding() - 1), 6.0);
            row[3] = scaled(static_cast<double>(secs_of_day / 3600), 23.0);
            if (f == 5) row[4] = scaled(static_cast<double>((secs_of_day / 60) % 60), 59.0);
        }
        return out;
    }

    const double omega = 2.0 * std::numbers::pi / options.period_hint;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const double phase = omega * static_cast<double>(indices[i]);
        out.data[i * 2] = std::sin(phase);
        out.data[i * 2 + 1] = std::cos(phase);
    }
    return out;
}

WindowBatch make_batch(const Series& series, const WindowSpec& spec, std::span<const std::size_t> starts,
                       const TimeFeatureOptions& features) {
    spec.validate();
    const std::size_t N = starts.size(), I = spec.input, O = spec.output, W = spec.window();
    const std::size_t c = series.channels();
    const std::size_t f = time_feature_count(series, features);

    WindowBatch batch;
    batch.spec = spec;
    batch.starts.assign(starts.begin(), starts.end());
    batch.time_index.resize(N * W);
    batch.inputs = Tensor({N, I, c});
    batch.targets = Tensor({N, O, c});
    batch.input_mean = Tensor({N, c});
    batch.features = Tensor({N, W, f});

    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t s = starts[n];
        if (s + W > series.length()) {
            throw DomainError("window at " + std::to_string(s) + " runs past series end " + std::to_string(series.length()));
        }
        std::iota(batch.time_index.begin() + n * W, batch.time_index.begin() + (n + 1) * W, s);
        for (std::size_t t = 0; t < I; ++t)
            for (std::size_t ch = 0; ch < c; ++ch) batch.inputs.data[(n * I + t) * c + ch] = series.at(s + t, ch);
        for (std::size_t t = 0; t < O; ++t)
            for (std::size_t ch = 0; ch < c; ++ch) batch.targets.data[(n * O + t) * c + ch] = series.at(s + I + t, ch);
        for (std::size_t ch = 0; ch < c; ++ch) {
            double acc = 0.0;
            for (std::size_t t = 0; t < I; ++t) acc += batch.inputs.data[(n * I + t) * c + ch];
            batch.input_mean.data[n * c + ch] = acc / static_cast<double>(I);
        }
        if (f > 0) {
            const auto feats = time_features(series, std::span(batch.time_index).subspan(n * W, W), features);
            std::copy(feats.data.begin(), feats.data.end(), batch.features.data.begin() + n * W * f);
        }
    }
    return batch;
}

WindowBatch sample_batch(const Segment& segment, const WindowSpec& spec, std::size_t n, std::uint64_t seed,
                         const TimeFeatureOptions& features) {
    const auto all = segment.window_starts(spec);
    if (all.empty()) throw DomainError("segment has no complete windows");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    if (n <= all.size()) {
        auto perm = all;
        std::shuffle(perm.begin(), perm.end(), rng);
        chosen.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
        for (std::size_t i = 0; i < n; ++i) chosen.push_back(all[pick(rng)]);
    }
    return make_batch(*segment.series, spec, chosen, features);
}

EpochSampler::EpochSampler(std::vector<std::size_t> starts, std::size_t batch_size)
    : starts_(std::move(starts)), batch_size_(batch_size) {
    if (batch_size_ == 0) throw ConfigError("batch size must be >= 1");
    if (starts_.empty()) throw DomainError("no windows to sample");
}

std::vector<std::vector<std::size_t>> EpochSampler::epoch(std::mt19937_64& rng) const {
    auto perm = starts_;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < perm.size(); i += batch_size_) {
        const std::size_t end = std::min(perm.size(), i + batch_size_);
        if (end - i < batch_size_ && !batches.empty()) break;
        batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(i), perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

}  // namespace autocon
