#pragma once

#include "autocon/tensor.hpp"

#include <vector>

namespace autocon {

/**
 * Autocorrelation-based contrastive loss.
 *
 * For every ordered pair (i, j), j != i, the pair is the positive and every
 * k != i with r(i,k) <= r(i,j) sits in the denominator:
 *
 *   L = -1/(N(N-1)) sum_i sum_{j!=i} r(i,j) log( exp(S(i,j)/tau) / sum_{k!=i, r(i,k)<=r(i,j)} exp(S(i,k)/tau) )
 *
 * k = j always belongs to the denominator, so N = 2 yields exactly 0.
 */

/// `similarity` is [N x N]; `relations` is symmetric, unit-diagonal, in [0,1].
Value autocon_loss_from_similarity(const Value& similarity, const Tensor& relations, double tau);

/// Cosine similarity of the rows of `pooled` ([N x d]) fed to the loss.
Value autocon_loss(const Value& pooled, const Tensor& relations, double tau);

/**
 * Channel-independent variant: `pooled` rows are laid out as n*channels + ch
 * and relations[ch] is that channel's [N x N] matrix. Returns the mean over channels.
 */
Value autocon_loss_channels(const Value& pooled, const std::vector<Tensor>& relations, double tau);

/// Literal triple loop over (i, j, k); plain doubles, no tape.
[[nodiscard]] double autocon_loss_oracle(const Tensor& similarity, const Tensor& relations, double tau);

/// Throws unless `relations` is a square, symmetric, unit-diagonal [0,1] matrix of side n.
void validate_relations(const Tensor& relations, std::size_t n);

}  // namespace autocon
