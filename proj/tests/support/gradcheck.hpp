// Central-difference gradient checker. Always runs in double: float has too
// little headroom between truncation and round-off at any step size.
#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "msaf/tensor.hpp"

namespace support {

struct GradCheckResult {
    bool ok = true;
    double worst_gap = 0;     // |analytic - numeric| at the worst element
    double worst_allowed = 0; // tolerance at that element
    std::string where;        // "leaf 1 elem 17: analytic=..., numeric=..."

    operator bool() const { return ok; }
};

// `loss_fn` must rebuild the graph from the current leaf values and return a
// scalar. Every tensor in `leaves` is checked element by element against a
// central difference of `loss_fn`; pass only the inputs the op declares
// differentiable.
inline GradCheckResult gradcheck(const std::function<msaf::TensorD()>& loss_fn,
                                 std::vector<msaf::TensorD> leaves, double h = 1e-4,
                                 double rtol = 1e-5, double atol = 1e-8) {
    using msaf::TensorD;

    for (auto& leaf : leaves) leaf.set_requires_grad(true);
    for (auto& leaf : leaves) leaf.zero_grad();

    TensorD loss = loss_fn();
    msaf::backward(loss);

    std::vector<std::vector<double>> analytic;
    for (auto& leaf : leaves)
        analytic.push_back(leaf.has_grad() ? leaf.grad() : std::vector<double>(leaf.values().size(), 0.0));

    GradCheckResult res;
    for (size_t li = 0; li < leaves.size(); ++li) {
        auto& vals = leaves[li].values();
        for (size_t i = 0; i < vals.size(); ++i) {
            double saved = vals[i];
            double lp, lm;
            {
                msaf::NoGradGuard ng;
                vals[i] = saved + h;
                lp = loss_fn().item();
                vals[i] = saved - h;
                lm = loss_fn().item();
            }
            vals[i] = saved;
            double numeric = (lp - lm) / (2 * h);
            double a = analytic[li][i];
            double gap = std::fabs(a - numeric);
            double allowed = rtol * std::max(std::fabs(a), std::fabs(numeric)) + atol;
            if (gap - allowed > res.worst_gap - res.worst_allowed || res.where.empty()) {
                res.worst_gap = gap;
                res.worst_allowed = allowed;
                std::ostringstream os;
                os << "leaf " << li << " elem " << i << ": analytic=" << a
                   << ", numeric=" << numeric;
                res.where = os.str();
            }
            if (gap > allowed) res.ok = false;
        }
    }
    return res;
}

} // namespace support
