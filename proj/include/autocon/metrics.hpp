#pragma once

#include "autocon/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace autocon {

[[nodiscard]] double mse(const Tensor& pred, const Tensor& truth);
[[nodiscard]] double mae(const Tensor& pred, const Tensor& truth);

using AlignmentPath = std::vector<std::pair<std::size_t, std::size_t>>;

struct DtwAlignment {
    double distance = 0.0;
    AlignmentPath path;  ///< (index in a, index in b), from (0,0) to (n-1,m-1)
};

/**
 * Classic DTW with squared pointwise cost. The returned path is recovered by
 * backtracking; among equal-cost predecessors the diagonal wins, then the
 * step that advances only `a` (down), then the one advancing only `b` (right).
 */
[[nodiscard]] DtwAlignment dtw_align(std::span<const double> a, std::span<const double> b);

/// Mean squared offset (i - j)^2 of a path from the main diagonal.
[[nodiscard]] double temporal_distortion(const AlignmentPath& path);

/// DTW distance per channel of [L x c] tensors, averaged over channels.
[[nodiscard]] double shape_dtw(const Tensor& pred, const Tensor& truth);
/// Temporal distortion of each channel's optimal path, averaged over channels.
[[nodiscard]] double temporal_dtw(const Tensor& pred, const Tensor& truth);

struct WindowMetrics {
    std::size_t start = 0;
    double mse = 0.0;
    double mae = 0.0;
    double shape_dtw = 0.0;
    double temporal_dtw = 0.0;
};

struct EvalReport {
    std::vector<WindowMetrics> windows;
    std::vector<double> horizon_mse;  ///< per forecast step, over windows and channels
    std::vector<double> horizon_mae;
    WindowMetrics aggregate;          ///< means of the per-window values
    std::size_t channels = 0;
    std::vector<std::pair<std::string, std::string>> config;
    std::string config_hash;
};

/// Scores [O x c] predictions against targets window by window.
[[nodiscard]] EvalReport evaluate_predictions(std::span<const Tensor> preds, std::span<const Tensor> truths,
                                              std::span<const std::size_t> starts);

/// Mean MSE over forecast steps [from, to) (0-based, half open).
[[nodiscard]] double horizon_range_mse(const EvalReport& report, std::size_t from, std::size_t to);

/// "horizon,mse,mae" rows followed by nothing else; header included.
[[nodiscard]] std::string horizon_csv(const EvalReport& report);
/// "start,mse,mae,shape_dtw,temporal_dtw" rows.
[[nodiscard]] std::string window_csv(const EvalReport& report);
/// Flat "key = value" summary with aggregates, counts and the config echo.
[[nodiscard]] std::string summary_text(const EvalReport& report);

}  // namespace autocon
