#pragma once

/// Composite Gauss-Legendre quadrature on intervals and tensor-product boxes.
///
/// Every rule here is a 20-point Gauss-Legendre panel repeated over a
/// uniform partition. Refinement doubles the number of panels per axis.

#include <functional>
#include <span>
#include <vector>

namespace cwnn::quad {

struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// 20-point Gauss-Legendre on each of `panels` equal sub-intervals.
Rule1D composite_rule(double lo, double hi, int panels);

/// Axis-aligned integration box.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
    std::size_t dim() const { return lo.size(); }
};

using Integrand = std::function<double(std::span<const double>)>;

/// Tensor-product composite rule with `panels` sub-intervals per axis.
double integrate(const Integrand& f, const Box& box, int panels);

double integrate_1d(const std::function<double(double)>& f, double lo, double hi, int panels);

struct Spec {
    int initial_panels = 4;
    int max_levels = 6;        ///< number of doublings allowed after the first pass
    double rel_tol = 1e-8;
    double abs_tol = 1e-13;    ///< floor for values that are legitimately ~0
};

struct Result {
    double value = 0.0;
    double previous = 0.0;     ///< estimate at the preceding refinement level
    int panels = 0;            ///< panels per axis at the accepted level
};

/// Doubles panels per axis until two successive estimates agree to
/// rel_tol·|value| + abs_tol. Throws QuadratureError at the level cap.
Result integrate_adaptive(const Integrand& f, const Box& box, const Spec& spec = {});

}  // namespace cwnn::quad
