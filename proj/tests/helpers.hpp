#pragma once

#include "autocon/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

namespace autocon::testing {

inline void check_close(std::span<const double> got, const std::vector<double>& want, double tol = 1e-12) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        INFO("index " << i << ": got " << got[i] << ", want " << want[i]);
        CHECK(std::abs(got[i] - want[i]) <= tol);
    }
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = u(rng);
    return t;
}

}  // namespace autocon::testing
