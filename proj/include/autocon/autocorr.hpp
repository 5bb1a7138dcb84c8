#pragma once

#include "autocon/data.hpp"
#include "autocon/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <span>
#include <vector>

namespace autocon {

enum class AcfMethod { direct, fft };

/**
 * Normalised global autocorrelation per channel. values[ch][h] is the
 * mean-centred sample ACF at lag h (biased estimator, values[ch][0] == 1).
 * Immutable after construction.
 */
struct AcfTable {
    std::size_t max_lag = 0;
    int smoothing_k = 1;
    std::vector<std::vector<double>> values;

    [[nodiscard]] std::size_t channels() const { return values.size(); }
    [[nodiscard]] double at(std::size_t ch, std::size_t lag) const { return values.at(ch).at(lag); }
};

/// Centred moving average of odd width k with replicate padding; length preserved.
[[nodiscard]] std::vector<double> moving_average(std::span<const double> x, int k);

/// Applies moving_average to every channel.
[[nodiscard]] Series smooth(const Series& series, int k);

/// Odd smoothing width covering roughly one seasonal day at the given sampling rate.
[[nodiscard]] int default_smoothing_k(Frequency freq);

/**
 * R(h) = sum_{t>=h} (x_t - m)(x_{t-h} - m) / sum_t (x_t - m)^2 for h = 0..max_lag.
 * Throws DomainError on a constant input.
 */
[[nodiscard]] std::vector<double> sample_acf(std::span<const double> x, std::size_t max_lag,
                                             AcfMethod method = AcfMethod::fft);

/**
 * Lag of the largest |R| outside the main lobe around lag 0 (the lags before
 * R first drops to <= 0). For a sinusoid this is the half-period trough or
 * the full-period peak. Falls back to the largest |R| over lags >= 1 when R
 * never changes sign.
 */
[[nodiscard]] std::size_t strongest_lag(std::span<const double> acf);

/// Smooths each channel of the training series then computes its ACF up to max_lag.
[[nodiscard]] AcfTable global_acf(const Series& train, std::size_t max_lag, int smoothing_k,
                                  AcfMethod method = AcfMethod::fft);

/// Number of global_acf evaluations in this process.
[[nodiscard]] std::size_t acf_compute_count();

/// |R(|t1 - t2|)| for a channel; lags beyond max_lag give 0 and log a warning.
[[nodiscard]] double relation(const AcfTable& acf, std::size_t t1, std::size_t t2, std::size_t ch);

/// [N x N] matrix of relation() over window start indices.
[[nodiscard]] Tensor relation_matrix(const AcfTable& acf, std::span<const std::size_t> starts, std::size_t ch);

/// "lag,channel,acf" rows with a header.
[[nodiscard]] std::string acf_csv(const AcfTable& acf, std::span<const std::string> channel_names);
void write_acf_csv(const std::filesystem::path& path, const AcfTable& acf, std::span<const std::string> channel_names);

}  // namespace autocon
