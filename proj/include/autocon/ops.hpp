#pragma once

#include "autocon/tensor.hpp"

#include <cstddef>
#include <vector>

// Differentiable operations on tape Values.
//
// Sequence ops (conv1d_causal, replicate_pad, avgpool1d, max_pool_time) take
// either a single sequence [L x c] or a batch [B x L x c]; time is the axis
// just before the last one.

namespace autocon {

/// Cosine-similarity norm stabilizer: a.b / ((|a|+eps)(|b|+eps)).
inline constexpr double kNormEpsilon = 1e-12;

/**
 * Matrix product over the last two axes. Rank-2 operands broadcast against a
 * rank-3 batch: [m x k].[B x k x n] -> [B x m x n] and [B x m x k].[k x n] -> [B x m x n].
 */
Value matmul(const Value& a, const Value& b);

/// Swaps the last two axes.
Value transpose(const Value& a);

Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value scale(const Value& a, double s);

/// Adds `bias` (shape [n]) to every length-n row of the last axis.
Value add_bias(const Value& x, const Value& bias);

/// x * Phi(x), Phi the exact standard normal CDF.
Value gelu(const Value& x);

/**
 * Causal dilated convolution, kernel [k x cin x cout]. Tap j reads
 * x[t - (k-1-j)*dilation]; positions before the start read zero, so the
 * output keeps the input length and y[t] depends only on x[<= t].
 */
Value conv1d_causal(const Value& x, const Value& kernel, int dilation);

/// Repeats the first row `left` times and the last row `right` times along time.
Value replicate_pad(const Value& x, int left, int right);

/// Stride-1 moving mean of width k along time; output length L-k+1.
Value avgpool1d(const Value& x, int k);

/// Max over time: [I x d] -> [d], [B x I x d] -> [B x d]. Ties route to the earliest index.
Value max_pool_time(const Value& v);

/// Divides each row of the last axis by (its L2 norm + kNormEpsilon).
Value l2_normalize(const Value& x);

/// Scalar cosine similarity of two [d] vectors.
Value cosine_sim(const Value& a, const Value& b);

/// Row-wise cosine similarity matrix of [N x d] -> [N x N].
Value cosine_sim_matrix(const Value& rows);

Value reshape(const Value& x, Shape shape);

/// Gathers entries of the first axis.
Value select_rows(const Value& x, const std::vector<std::size_t>& rows);

/// Concatenates along the last axis; leading axes must agree.
Value concat_last(const Value& a, const Value& b);

/// Sum of all entries as a [1] value.
Value sum(const Value& x);
Value mean(const Value& x);

/// Mean of squared differences as a [1] value.
Value mse_loss(const Value& pred, const Value& target);

}  // namespace autocon
