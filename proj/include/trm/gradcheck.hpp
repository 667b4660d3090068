#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "trm/hostnet.hpp"
#include "trm/tensor.hpp"

namespace trm {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> per_param;  // includes an "input" entry
    double max_rel_err = 0.0;
    double tolerance = 1e-4;
    bool pass = false;
};

// Relative error with a small absolute floor so that near-zero pairs do not
// explode the ratio.
inline double grad_rel_err(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
    return std::fabs(analytic - numeric) / denom;
}

/// Central finite-difference check of analytic gradients on every parameter
/// and every input element. The target must expose params(), zero_grad() and
/// loss_and_grad(x, grad_input*), and its loss must be a pure function of
/// parameters and input (frozen running stats, no dropout).
///
/// Meaningful only in 64-bit mode; the default step of 1e-5 balances
/// truncation against rounding there.
template <class Target>
GradCheckReport grad_check(Target&& target, Tensor<double>& input, double tolerance = 1e-4,
                           double step = 1e-5) {
    GradCheckReport report;
    report.tolerance = tolerance;

    target.zero_grad();
    Tensor<double> grad_input;
    const double base_loss = target.loss_and_grad(input, &grad_input);
    if (!std::isfinite(base_loss)) throw NumericError("non-finite loss in gradient check");

    auto params = target.params();
    std::vector<Tensor<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(*p.grad);

    auto eval = [&](double& cell) {
        const double old = cell;
        cell = old + step;
        target.zero_grad();
        const double plus = target.loss_and_grad(input, nullptr);
        cell = old - step;
        target.zero_grad();
        const double minus = target.loss_and_grad(input, nullptr);
        cell = old;
        if (!std::isfinite(plus) || !std::isfinite(minus))
            throw NumericError("non-finite loss in gradient check");
        return (plus - minus) / (2.0 * step);
    };

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        GradCheckEntry entry{params[pi].name, 0.0};
        Tensor<double>& value = *params[pi].value;
        for (std::int64_t i = 0; i < value.numel(); ++i) {
            const double numeric = eval(value[i]);
            entry.max_rel_err = std::max(entry.max_rel_err, grad_rel_err(analytic[pi][i], numeric));
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.per_param.push_back(entry);
    }

    GradCheckEntry input_entry{"input", 0.0};
    for (std::int64_t i = 0; i < input.numel(); ++i) {
        const double numeric = eval(input[i]);
        input_entry.max_rel_err =
            std::max(input_entry.max_rel_err, grad_rel_err(grad_input[i], numeric));
    }
    report.max_rel_err = std::max(report.max_rel_err, input_entry.max_rel_err);
    report.per_param.push_back(input_entry);

    report.pass = report.max_rel_err <= tolerance;
    return report;
}

/// Adapts a full classifier (with fixed labels) to the grad_check target
/// concept. Runs in training mode with frozen running statistics; build the
/// model with dropout_p = 0 for a deterministic loss.
template <class S>
struct ClassifierGradTarget {
    ClassifierModel<S>* model;
    std::vector<int> labels;

    std::vector<ParamRef<S>> params() { return model->params(); }
    void zero_grad() { model->zero_grad(); }
    double loss_and_grad(const Tensor<S>& x, Tensor<S>* grad_input) {
        return model->loss_and_grad(x, labels, Mode::kTraining, /*update_running=*/false,
                                    grad_input);
    }
};

}  // namespace trm
