#include "autocon/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace autocon {
namespace {

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
    double diff = 0.0, scale = 1e-8;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        const double a = analytic.empty() ? 0.0 : analytic[i];
        diff = std::max(diff, std::abs(a - numeric[i]));
        scale = std::max({scale, std::abs(a), std::abs(numeric[i])});
    }
    return diff / scale;
}

}  // namespace

GradcheckOutcome finite_difference_check(const ScalarFn& fn, const std::vector<Tensor>& inputs, double step) {
    GradcheckOutcome outcome;

    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        std::vector<Value> vars;
        for (const auto& t : inputs) vars.push_back(tape.variable(t));
        const auto loss = fn(tape, vars);
        tape.backward(loss);
        for (const auto& v : vars) {
            auto g = v.grad();
            analytic.emplace_back(g.begin(), g.end());
        }
        ++outcome.evaluations;
    }

    auto evaluate = [&](const std::vector<Tensor>& at) {
        Tape tape;
        std::vector<Value> consts;
        for (const auto& t : at) consts.push_back(tape.constant(t));
        ++outcome.evaluations;
        return fn(tape, consts).item();
    };

    std::vector<Tensor> probe = inputs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        std::vector<double> numeric(inputs[i].size());
        for (std::size_t k = 0; k < numeric.size(); ++k) {
            const double orig = probe[i].data[k];
            probe[i].data[k] = orig + step;
            const double fp = evaluate(probe);
            probe[i].data[k] = orig - step;
            const double fm = evaluate(probe);
            probe[i].data[k] = orig;
            numeric[k] = (fp - fm) / (2.0 * step);
        }
        outcome.max_rel_error = std::max(outcome.max_rel_error, relative_error(analytic[i], numeric));
    }
    return outcome;
}

GradcheckOutcome finite_difference_check(const std::function<Value(Tape&)>& fn, std::span<Parameter* const> params,
                                         double step) {
    GradcheckOutcome outcome;
    std::vector<std::vector<double>> saved;
    for (auto* p : params) {
        saved.push_back(p->grad);
        p->zero_grad();
    }
    {
        Tape tape;
        tape.backward(fn(tape));
        ++outcome.evaluations;
    }
    std::vector<std::vector<double>> analytic;
    for (auto* p : params) analytic.push_back(p->grad);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& values = params[i]->value.data;
        std::vector<double> numeric(values.size());
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double orig = values[k];
            values[k] = orig + step;
            double fp, fm;
            {
                Tape tape;
                fp = fn(tape).item();
            }
            values[k] = orig - step;
            {
                Tape tape;
                fm = fn(tape).item();
            }
            values[k] = orig;
            outcome.evaluations += 2;
            numeric[k] = (fp - fm) / (2.0 * step);
        }
        outcome.max_rel_error = std::max(outcome.max_rel_error, relative_error(analytic[i], numeric));
    }
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->grad = std::move(saved[i]);
    return outcome;
}

}  // namespace autocon
