#pragma once

#include "autocon/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace autocon {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers follow the parameter order given at step().
class Adam {
public:
    explicit Adam(AdamOptions options);

    /// Applies one update using each parameter's accumulated `grad`.
    void step(std::span<Parameter* const> params);

    [[nodiscard]] std::size_t steps_taken() const { return step_; }
    [[nodiscard]] const AdamOptions& options() const { return opts_; }

private:
    AdamOptions opts_;
    std::size_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace autocon
