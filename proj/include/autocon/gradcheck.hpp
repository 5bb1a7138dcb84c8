#pragma once

#include "autocon/tensor.hpp"

#include <functional>
#include <span>
#include <vector>

namespace autocon {

/// Builds a scalar loss from the given inputs on the given tape.
using ScalarFn = std::function<Value(Tape&, std::span<const Value>)>;

struct GradcheckOutcome {
    double max_rel_error = 0.0;
    std::size_t evaluations = 0;
};

/**
 * Compares tape gradients of `fn` against central finite differences at
 * `inputs`. Error per input is max|analytic - numeric| divided by
 * max(max|analytic|, max|numeric|, 1e-8); the worst input is reported.
 */
GradcheckOutcome finite_difference_check(const ScalarFn& fn, const std::vector<Tensor>& inputs, double step = 1e-5);

/// Same, but differentiates with respect to parameters the loss reads.
GradcheckOutcome finite_difference_check(const std::function<Value(Tape&)>& fn, std::span<Parameter* const> params,
                                         double step = 1e-5);

}  // namespace autocon
