#include "cwnn/quadrature.hpp"

#include "cwnn/error.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <sstream>

namespace cwnn::quad {

namespace {

using GL20 = boost::math::quadrature::gauss<double, 20>;

}  // namespace

Rule1D composite_rule(double lo, double hi, int panels) {
    if (panels < 1 || !(hi > lo))
        throw ContractError("composite_rule: need hi > lo and panels >= 1");
    const auto& xs = GL20::abscissa();
    const auto& ws = GL20::weights();
    Rule1D rule;
    rule.nodes.reserve(static_cast<std::size_t>(panels) * 20);
    rule.weights.reserve(rule.nodes.capacity());
    const double width = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + p * width;
        const double mid = a + 0.5 * width;
        const double half = 0.5 * width;
        // boost stores the non-negative half of the symmetric rule
        for (std::size_t i = 0; i < xs.size(); ++i) {
            rule.nodes.push_back(mid - half * xs[i]);
            rule.weights.push_back(half * ws[i]);
            rule.nodes.push_back(mid + half * xs[i]);
            rule.weights.push_back(half * ws[i]);
        }
    }
    return rule;
}

double integrate_1d(const std::function<double(double)>& f, double lo, double hi, int panels) {
    const Rule1D r = composite_rule(lo, hi, panels);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i)
        sum += r.weights[i] * f(r.nodes[i]);
    return sum;
}

double integrate(const Integrand& f, const Box& box, int panels) {
    const std::size_t d = box.dim();
    if (d == 0 || box.hi.size() != d)
        throw ContractError("integrate: box bounds must be non-empty and of equal length");
    std::vector<Rule1D> rules;
    rules.reserve(d);
    for (std::size_t k = 0; k < d; ++k)
        rules.push_back(composite_rule(box.lo[k], box.hi[k], panels));

    const std::size_t per_axis = rules[0].nodes.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    double total = 0.0;
    // Odometer over the tensor grid; the innermost axis varies fastest.
    for (;;) {
        double w = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
            x[k] = rules[k].nodes[idx[k]];
            w *= rules[k].weights[idx[k]];
        }
        total += w * f(x);
        std::size_t k = d;
        while (k > 0) {
            --k;
            if (++idx[k] < per_axis)
                break;
            idx[k] = 0;
            if (k == 0)
                return total;
        }
    }
}

Result integrate_adaptive(const Integrand& f, const Box& box, const Spec& spec) {
    int panels = spec.initial_panels;
    double prev = integrate(f, box, panels);
    if (spec.max_levels <= 0)
        return {prev, prev, panels};
    double cur = prev;
    for (int level = 0; level < spec.max_levels; ++level) {
        panels *= 2;
        cur = integrate(f, box, panels);
        if (std::abs(cur - prev) <= spec.rel_tol * std::abs(cur) + spec.abs_tol)
            return {cur, prev, panels};
        if (level + 1 < spec.max_levels)
            prev = cur;
    }
    std::ostringstream msg;
    msg << "quadrature did not converge after " << spec.max_levels
        << " refinements (" << panels << " panels per axis)";
    throw QuadratureError(msg.str(), prev, cur);
}

}  // namespace cwnn::quad
