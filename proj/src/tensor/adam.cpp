#include "autocon/adam.hpp"

#include "autocon/errors.hpp"

#include <cmath>
#include <string>

namespace autocon {

Adam::Adam(AdamOptions options) : opts_(options) {
    if (!(opts_.lr > 0.0)) throw ParameterError("adam: learning rate must be > 0, got " + std::to_string(opts_.lr));
    if (opts_.beta1 < 0.0 || opts_.beta1 >= 1.0 || opts_.beta2 < 0.0 || opts_.beta2 >= 1.0) {
        throw ParameterError("adam: betas must lie in [0, 1)");
    }
    if (!(opts_.eps > 0.0)) throw ParameterError("adam: eps must be > 0");
}

void Adam::step(std::span<Parameter* const> params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i]->value.size(), 0.0);
            v_[i].assign(params[i]->value.size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw ContractError("adam: parameter list changed between steps");

    ++step_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        auto& m = m_[i];
        auto& v = v_[i];
        if (m.size() != p.value.size() || p.grad.size() != p.value.size()) {
            throw DimensionError("adam: moment buffer shape differs from parameter '" + p.name + "'");
        }
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double g = p.grad[k];
            m[k] = opts_.beta1 * m[k] + (1.0 - opts_.beta1) * g;
            v[k] = opts_.beta2 * v[k] + (1.0 - opts_.beta2) * g * g;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p.value.data[k] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
        }
    }
}

}  // namespace autocon
