#pragma once

// Central finite-difference verification of the reverse-mode gradients.
// Runs on whatever scalar type the caller instantiates; double is the
// meaningful choice (step 1e-5, agreement down to ~1e-9), float uses a
// 1e-3 step. Large tensors are spot-checked on a seeded coordinate
// subset. The reported error is
//   max_i |g_ad[i] - g_fd[i]| / max(||g_ad||_inf, ||g_fd||_inf, 1e-12)
// per tensor, i.e. scaled by the dominant gradient magnitude.

#include <functional>
#include <string>

#include "sissa/nn/graph.hpp"
#include "sissa/util/rng.hpp"

namespace sissa::nn {

struct GradCheckItem {
    std::string name;
    double rel_err = 0.0;
    size_t coords_checked = 0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::vector<GradCheckItem> items;
};

template <typename R>
using LossFn = std::function<typename GraphT<R>::Var(
    GraphT<R>&, const std::vector<typename GraphT<R>::Var>&)>;

template <typename R>
GradCheckReport grad_check(
    const std::vector<std::pair<std::string, TensorT<R>>>& inputs,
    const LossFn<R>& loss_fn, double tolerance, uint64_t seed,
    size_t max_coords_per_tensor = 256) {
    GradCheckReport report;
    report.tolerance = tolerance;

    // Reverse-mode gradients.
    std::vector<TensorT<R>> ad_grads;
    {
        GraphT<R> g;
        std::vector<typename GraphT<R>::Var> vars;
        for (const auto& [name, t] : inputs) vars.push_back(g.input(t, true));
        auto loss = loss_fn(g, vars);
        g.backward(loss);
        for (auto v : vars) ad_grads.push_back(g.grad(v));
    }

    auto eval_loss = [&](const std::vector<TensorT<R>>& tensors) -> double {
        GraphT<R> g;
        std::vector<typename GraphT<R>::Var> vars;
        for (const auto& t : tensors) vars.push_back(g.input(t, false));
        auto loss = loss_fn(g, vars);
        return static_cast<double>(g.val(loss).data[0]);
    };

    std::vector<TensorT<R>> work;
    for (const auto& [name, t] : inputs) work.push_back(t);

    const double base_h = sizeof(R) == 8 ? 1e-5 : 1e-3;
    Rng rng(seed);

    for (size_t ti = 0; ti < inputs.size(); ++ti) {
        const auto& tensor = inputs[ti].second;
        const size_t count = tensor.data.size();
        std::vector<size_t> coords;
        if (count <= max_coords_per_tensor) {
            coords.resize(count);
            for (size_t i = 0; i < count; ++i) coords[i] = i;
        } else {
            coords = sample_indices(count, max_coords_per_tensor, rng);
        }

        double ad_max = 0.0, fd_max = 0.0, diff_max = 0.0;
        for (double v : ad_grads[ti].data)
            ad_max = std::max(ad_max, std::fabs(static_cast<double>(v)));

        for (size_t ci : coords) {
            const double x0 = static_cast<double>(work[ti].data[ci]);
            const double h = base_h * std::max(1.0, std::fabs(x0));
            work[ti].data[ci] = static_cast<R>(x0 + h);
            const double lp = eval_loss(work);
            work[ti].data[ci] = static_cast<R>(x0 - h);
            const double lm = eval_loss(work);
            work[ti].data[ci] = static_cast<R>(x0);
            const double fd = (lp - lm) / (2.0 * h);
            const double ad = static_cast<double>(ad_grads[ti].data[ci]);
            fd_max = std::max(fd_max, std::fabs(fd));
            diff_max = std::max(diff_max, std::fabs(ad - fd));
        }

        const double denom = std::max({ad_max, fd_max, 1e-12});
        GradCheckItem item;
        item.name = inputs[ti].first;
        item.rel_err = diff_max / denom;
        item.coords_checked = coords.size();
        report.max_rel_err = std::max(report.max_rel_err, item.rel_err);
        report.items.push_back(std::move(item));
    }
    report.passed = report.max_rel_err < tolerance;
    return report;
}

}  // namespace sissa::nn
