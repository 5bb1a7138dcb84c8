#include "autocon/autocon_loss.hpp"

#include "autocon/errors.hpp"
#include "autocon/ops.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace autocon {
namespace {

constexpr double kRelationTolerance = 1e-12;

void check_tau(double tau) {
    if (!(tau > 0.0)) throw ParameterError("autocon: temperature must be > 0, got " + std::to_string(tau));
}

// Per-anchor forward context kept for the backward pass.
struct AnchorContext {
    std::vector<std::size_t> order;      // k != i sorted by r(i,k) ascending
    std::vector<std::size_t> first;      // order position -> first position of its tie group
    std::vector<double> logit;           // S(i,k)/tau, indexed like order
    std::vector<double> log_denom;       // log of the denominator for the positive at each position
};

double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    const double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

AnchorContext build_anchor(std::span<const double> sim, const Tensor& r, std::size_t n, std::size_t i, double tau) {
    AnchorContext ctx;
    for (std::size_t k = 0; k < n; ++k)
        if (k != i) ctx.order.push_back(k);
    std::stable_sort(ctx.order.begin(), ctx.order.end(),
                     [&](std::size_t a, std::size_t b) { return r.data[i * n + a] < r.data[i * n + b]; });
    const std::size_t m = ctx.order.size();
    const auto rel = [&](std::size_t p) { return r.data[i * n + ctx.order[p]]; };

    ctx.first.resize(m);
    for (std::size_t p = 0; p < m; ++p) ctx.first[p] = p > 0 && rel(p - 1) == rel(p) ? ctx.first[p - 1] : p;

    ctx.logit.resize(m);
    std::vector<double> running(m);
    double lse = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < m; ++p) {
        ctx.logit[p] = sim[i * n + ctx.order[p]] / tau;
        lse = log_add_exp(lse, ctx.logit[p]);
        running[p] = lse;
    }
    // The denominator of a positive covers its whole tie group.
    ctx.log_denom.resize(m);
    for (std::size_t p = m; p-- > 0;) {
        const bool tied_next = p + 1 < m && rel(p + 1) == rel(p);
        ctx.log_denom[p] = tied_next ? ctx.log_denom[p + 1] : running[p];
    }
    return ctx;
}

}  // namespace

void validate_relations(const Tensor& relations, std::size_t n) {
    if (relations.rank() != 2 || relations.shape[0] != n || relations.shape[1] != n) {
        throw DimensionError("autocon: relations must be [" + std::to_string(n) + " x " + std::to_string(n) + "], got " +
                             shape_str(relations.shape));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(relations.data[i * n + i] - 1.0) > kRelationTolerance) {
            throw ParameterError("autocon: relation diagonal must be 1");
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double v = relations.data[i * n + j];
            if (!(v >= -kRelationTolerance && v <= 1.0 + kRelationTolerance)) {
                throw ParameterError("autocon: relation entries must lie in [0, 1]");
            }
            if (std::abs(v - relations.data[j * n + i]) > kRelationTolerance) {
                throw ParameterError("autocon: relation matrix must be symmetric");
            }
        }
    }
}

Value autocon_loss_from_similarity(const Value& similarity, const Tensor& relations, double tau) {
    check_tau(tau);
    const auto& s = similarity.shape();
    if (s.size() != 2 || s[0] != s[1]) throw DimensionError("autocon: similarity must be square, got " + shape_str(s));
    const std::size_t n = s[0];
    validate_relations(relations, n);
    if (n < 2) {
        spdlog::warn("autocon loss on a batch of {} window(s) is identically zero", n);
        return similarity.tape().record({1}, {0.0}, {similarity}, [](Tape&, std::size_t) {});
    }

    const auto sim = similarity.data();
    std::vector<AnchorContext> anchors;
    anchors.reserve(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto ctx = build_anchor(sim, relations, n, i, tau);
        for (std::size_t p = 0; p < ctx.order.size(); ++p) {
            const double w = relations.data[i * n + ctx.order[p]];
            if (w == 0.0) continue;
            total += w * (ctx.logit[p] - ctx.log_denom[p]);
        }
        anchors.push_back(std::move(ctx));
    }
    const double norm = -1.0 / (static_cast<double>(n) * static_cast<double>(n - 1));

    const auto id = similarity.id();
    return similarity.tape().record(
        {1}, {norm * total}, {similarity},
        [id, n, tau, norm, relations, anchors = std::move(anchors)](Tape& tp, std::size_t self) {
            const double g = tp.grad(self)[0] * norm / tau;
            auto dS = tp.grad_mut(id);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& ctx = anchors[i];
                const std::size_t m = ctx.order.size();
                // tail[p] = sum over positives j >= p of r(i,j) * D(p) / D(j); every ratio is <= 1.
                std::vector<double> tail(m + 1, 0.0);
                for (std::size_t p = m; p-- > 0;) {
                    const double carry = p + 1 < m ? std::exp(ctx.log_denom[p] - ctx.log_denom[p + 1]) * tail[p + 1] : 0.0;
                    tail[p] = relations.data[i * n + ctx.order[p]] + carry;
                }
                // Position p sits in the denominator of every positive from the start of its tie group on.
                for (std::size_t p = 0; p < m; ++p) {
                    const std::size_t k = ctx.order[p];
                    const std::size_t f = ctx.first[p];
                    const double share = std::exp(ctx.logit[p] - ctx.log_denom[f]) * tail[f];
                    dS[i * n + k] += g * (relations.data[i * n + k] - share);
                }
            }
        });
}

Value autocon_loss(const Value& pooled, const Tensor& relations, double tau) {
    if (pooled.shape().size() != 2) throw DimensionError("autocon: pooled must be [N x d], got " + shape_str(pooled.shape()));
    return autocon_loss_from_similarity(cosine_sim_matrix(pooled), relations, tau);
}

Value autocon_loss_channels(const Value& pooled, const std::vector<Tensor>& relations, double tau) {
    const std::size_t channels = relations.size();
    if (channels == 0) throw DimensionError("autocon: no relation matrices");
    const std::size_t rows = pooled.shape().at(0);
    if (rows % channels != 0) throw DimensionError("autocon: pooled rows not divisible by channel count");
    if (channels == 1) return autocon_loss(pooled, relations[0], tau);
    const std::size_t n = rows / channels;
    Value acc;
    for (std::size_t ch = 0; ch < channels; ++ch) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i * channels + ch;
        const auto term = autocon_loss(select_rows(pooled, idx), relations[ch], tau);
        acc = acc.valid() ? add(acc, term) : term;
    }
    return scale(acc, 1.0 / static_cast<double>(channels));
}

double autocon_loss_oracle(const Tensor& similarity, const Tensor& relations, double tau) {
    check_tau(tau);
    if (similarity.rank() != 2 || similarity.shape[0] != similarity.shape[1]) {
        throw DimensionError("autocon oracle: similarity must be square");
    }
    const std::size_t n = similarity.shape[0];
    validate_relations(relations, n);
    if (n < 2) return 0.0;
    const auto S = [&](std::size_t i, std::size_t j) { return similarity.data[i * n + j]; };
    const auto r = [&](std::size_t i, std::size_t j) { return relations.data[i * n + j]; };

    double outer = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double denom = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (k != i && r(i, k) <= r(i, j)) denom += std::exp(S(i, k) / tau);
            }
            inner += r(i, j) * std::log(std::exp(S(i, j) / tau) / denom);
        }
        outer += inner / static_cast<double>(n - 1);
    }
    return -outer / static_cast<double>(n);
}

}  // namespace autocon
