#pragma once

#include "autocon/tensor.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace autocon {

enum class Frequency { none, min10, min15, hourly, daily, weekly };

[[nodiscard]] std::string to_string(Frequency f);
[[nodiscard]] Frequency parse_frequency(std::string_view text);

/// Parses "YYYY-MM-DD[( |T)HH:MM[:SS]]" into seconds since the Unix epoch (UTC).
[[nodiscard]] std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Best match for the median spacing of the timestamps, `none` when unrecognised.
[[nodiscard]] Frequency infer_frequency(const std::vector<std::int64_t>& timestamps);

/// A full observed series. Immutable once loaded.
struct Series {
    std::string name;
    Tensor values;  ///< [T x c]
    std::vector<std::string> channel_names;
    std::vector<std::int64_t> timestamps;  ///< epoch seconds; empty means the integer clock 0..T-1
    Frequency freq = Frequency::none;

    [[nodiscard]] std::size_t length() const { return values.rank() == 2 ? values.shape[0] : 0; }
    [[nodiscard]] std::size_t channels() const { return values.rank() == 2 ? values.shape[1] : 0; }
    [[nodiscard]] double at(std::size_t t, std::size_t ch) const { return values.data[t * channels() + ch]; }
    [[nodiscard]] std::vector<double> channel(std::size_t ch) const;
    [[nodiscard]] bool has_timestamps() const { return !timestamps.empty(); }
};

/// Builds a series from a [T x c] value matrix with an integer clock.
[[nodiscard]] Series make_series(std::string name, Tensor values);

struct CsvOptions {
    std::optional<std::string> date_column;  ///< defaults to a header column named "date"
    std::vector<std::string> value_columns;  ///< empty: every non-date column
};

/// Reads a CSV series; a header row is optional. Missing or non-numeric cells are errors.
[[nodiscard]] Series load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

struct WindowSpec {
    std::size_t input = 0;
    std::size_t output = 0;

    [[nodiscard]] std::size_t window() const { return input + output; }
    void validate() const;
};

/// Number of length-(I+O) windows in a length-T series.
[[nodiscard]] std::size_t window_count(std::size_t length, std::size_t input, std::size_t output);

/**
 * Contiguous chronological slice of a series. Points in [begin, end) belong
 * to the segment; the `context` points before `begin` may be read as window
 * inputs but never appear in targets.
 */
struct Segment {
    std::shared_ptr<const Series> series;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t context = 0;

    [[nodiscard]] std::size_t length() const { return end - begin; }
    /// Global start index of every window whose target lies inside the segment.
    [[nodiscard]] std::vector<std::size_t> window_starts(const WindowSpec& spec) const;
    [[nodiscard]] std::size_t window_count(const WindowSpec& spec) const;
    /// Copies the owned range [begin, end) into a standalone series.
    [[nodiscard]] Series materialize() const;
};

struct SplitRatios {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

struct Split {
    Segment train, val, test;
    SplitRatios ratios;
};

/**
 * Chronological train/val/test split. Train and test lengths are the floor of
 * T times their normalised ratio, validation takes the remainder. Val/test
 * carry the preceding `spec.input` points as context.
 */
[[nodiscard]] Split chrono_split(std::shared_ptr<const Series> series, SplitRatios ratios, const WindowSpec& spec);

/// "key = value" lines recording the split boundaries; '#' lines are ignored on read.
[[nodiscard]] std::string split_manifest_text(const Split& split);
void write_split_manifest(const std::filesystem::path& path, const Split& split);

struct SplitManifest {
    std::size_t length = 0;
    SplitRatios ratios;
    std::array<std::size_t, 3> begin{};
    std::array<std::size_t, 3> end{};
    std::array<std::size_t, 3> context{};
};

[[nodiscard]] SplitManifest read_split_manifest(const std::filesystem::path& path);

struct TimeFeatureOptions {
    /// Period of the sin/cos clock used when the series has no calendar; <= 0 disables it.
    double period_hint = 0.0;
};

/// Features per time step for a series.
[[nodiscard]] std::size_t time_feature_count(const Series& series, const TimeFeatureOptions& options);

/**
 * Timestamp features at the given global indices, [indices.size() x f].
 *
 * Calendar series: month-of-year, day-of-month, day-of-week, hour-of-day and
 * (sub-hourly only) minute-of-hour, each mapped affinely onto [-0.5, 0.5].
 * Otherwise: sin and cos of 2*pi*index/period_hint.
 */
[[nodiscard]] Tensor time_features(const Series& series, std::span<const std::size_t> indices,
                                   const TimeFeatureOptions& options);

/// N sampled windows with global indices into the full series.
struct WindowBatch {
    WindowSpec spec;
    std::vector<std::size_t> starts;      ///< [N]
    std::vector<std::size_t> time_index;  ///< [N x W] global index sequences
    Tensor inputs;                        ///< [N x I x c]
    Tensor targets;                       ///< [N x O x c]
    Tensor input_mean;                    ///< [N x c]
    Tensor features;                      ///< [N x W x f]

    [[nodiscard]] std::size_t size() const { return starts.size(); }
    [[nodiscard]] std::size_t channels() const { return inputs.rank() == 3 ? inputs.shape[2] : 0; }
    [[nodiscard]] std::size_t feature_count() const { return features.rank() == 3 ? features.shape[2] : 0; }
};

/// Assembles the windows beginning at the given global starts.
[[nodiscard]] WindowBatch make_batch(const Series& series, const WindowSpec& spec, std::span<const std::size_t> starts,
                                     const TimeFeatureOptions& features = {});

/**
 * Draws N windows of the segment: without replacement when N <= M,
 * with replacement otherwise. Deterministic in `seed`.
 */
[[nodiscard]] WindowBatch sample_batch(const Segment& segment, const WindowSpec& spec, std::size_t n,
                                       std::uint64_t seed, const TimeFeatureOptions& features = {});

/// One pass over all windows in shuffled order, chunked into batches of N.
class EpochSampler {
public:
    EpochSampler(std::vector<std::size_t> starts, std::size_t batch_size);

    /// Shuffles and returns the batches for one epoch. A trailing partial
    /// batch is dropped unless it is the only batch.
    [[nodiscard]] std::vector<std::vector<std::size_t>> epoch(std::mt19937_64& rng) const;

private:
    std::vector<std::size_t> starts_;
    std::size_t batch_size_;
};

}  // namespace autocon
