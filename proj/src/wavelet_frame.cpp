#include "cwnn/wavelet_frame.hpp"

#include "cwnn/error.hpp"
#include "cwnn/quadrature.hpp"
#include "cwnn/rng.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

namespace cwnn {

namespace {

constexpr double kPi = std::numbers::pi;

// sin(x)/x with the removable singularity filled in
double sinc1(double x) {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

// Surface area of the unit sphere in R^d.
double sphere_area(int d) {
    return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

double ball_volume(int d) {
    return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

void check_dim(const MotherWavelet& w, std::size_t got, const char* what) {
    if (got != static_cast<std::size_t>(w.dim())) {
        std::ostringstream msg;
        msg << what << ": expected input of dimension " << w.dim() << ", got " << got;
        throw ContractError(msg.str());
    }
}

// Radial inverse Fourier transform of pi * 1{1 <= |w| <= 2} in R^d:
//   psi(r) = (2pi)^{-d/2} pi r^{-d} [G(2r) - G(r)],  G(t) = int_0^t J_nu(s) s^{nu+1} ds,
// with nu = d/2 - 1. G is accumulated panel by panel on the table grid.
std::shared_ptr<const RadialProfile> tabulate_sinc(int d, const SincProfileOptions& opts) {
    using GL = boost::math::quadrature::gauss<double, 4>;
    const double nu = 0.5 * d - 1.0;
    const double h = opts.step;
    const auto count = static_cast<std::size_t>(std::ceil(opts.max_radius / h)) + 1;

    std::vector<double> cumulative(2 * count, 0.0);
    const auto& xs = GL::abscissa();
    const auto& ws = GL::weights();
    auto integrand = [nu](double s) {
        return boost::math::cyl_bessel_j(nu, s) * std::pow(s, nu + 1.0);
    };
    for (std::size_t j = 1; j < cumulative.size(); ++j) {
        const double mid = (static_cast<double>(j) - 0.5) * h;
        const double half = 0.5 * h;
        double panel = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            panel += ws[i] * (integrand(mid - half * xs[i]) + integrand(mid + half * xs[i]));
        cumulative[j] = cumulative[j - 1] + half * panel;
    }

    auto prof = std::make_shared<RadialProfile>();
    prof->step = h;
    prof->max_radius = opts.max_radius;
    prof->values.resize(count);
    const double pref = std::pow(2.0 * kPi, -0.5 * d) * kPi;
    prof->values[0] = std::pow(2.0 * kPi, -d) * kPi * ball_volume(d) * (std::pow(2.0, d) - 1.0);
    for (std::size_t i = 1; i < count; ++i) {
        const double r = static_cast<double>(i) * h;
        prof->values[i] = pref * std::pow(r, -d) * (cumulative[2 * i] - cumulative[i]);
    }
    return prof;
}

std::shared_ptr<const RadialProfile> cached_sinc_profile(int d, const SincProfileOptions& opts) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, double>, std::shared_ptr<const RadialProfile>> cache;
    const auto key = std::make_tuple(d, opts.step, opts.max_radius);
    std::lock_guard lock(mu);
    auto it = cache.find(key);
    if (it != cache.end())
        return it->second;
    auto prof = tabulate_sinc(d, opts);
    cache.emplace(key, prof);
    return prof;
}

}  // namespace

std::string to_string(Family f) {
    return f == Family::MexicanHat ? "mexican_hat" : "sinc";
}

Family family_from_string(const std::string& s) {
    if (s == "mexican_hat" || s == "mexicanhat" || s == "MexicanHat")
        return Family::MexicanHat;
    if (s == "sinc" || s == "Sinc")
        return Family::Sinc;
    throw ContractError("unknown wavelet family '" + s + "'");
}

std::string to_string(BasisKind k) {
    return k == BasisKind::Wavelet ? "wavelet" : "scaling";
}

double RadialProfile::operator()(double r) const {
    r = std::abs(r);
    if (r > max_radius)
        return 0.0;
    const double u = r / step;
    auto i = static_cast<std::ptrdiff_t>(u);
    const auto last = static_cast<std::ptrdiff_t>(values.size()) - 1;
    // four-point stencil i-1..i+2, shifted at the ends; psi is even in r so
    // the left end mirrors values[1] into index -1
    auto at = [&](std::ptrdiff_t k) {
        if (k < 0)
            return values[static_cast<std::size_t>(-k)];
        return values[static_cast<std::size_t>(std::min(k, last))];
    };
    if (i >= last)
        return values[static_cast<std::size_t>(last)];
    const double t = u - static_cast<double>(i);
    const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    // Lagrange cubic through nodes -1, 0, 1, 2
    const double l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    const double l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    return l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3;
}

MotherWavelet MotherWavelet::mexican_hat(int dim) {
    if (dim < 1)
        throw ContractError("mother wavelet dimension must be positive");
    MotherWavelet w(Family::MexicanHat, dim);
    w.norm_sq_ = mother_norm_sq(w);
    return w;
}

MotherWavelet MotherWavelet::sinc(int dim, SincProfileOptions opts) {
    if (dim < 1)
        throw ContractError("mother wavelet dimension must be positive");
    if (!(opts.step > 0.0) || !(opts.max_radius > opts.step))
        throw ContractError("sinc profile: need 0 < step < max_radius");
    MotherWavelet w(Family::Sinc, dim);
    if (dim >= 2)
        w.profile_ = cached_sinc_profile(dim, opts);
    w.norm_sq_ = mother_norm_sq(w);
    return w;
}

MotherWavelet MotherWavelet::make(Family family, int dim) {
    return family == Family::MexicanHat ? mexican_hat(dim) : sinc(dim);
}

double MotherWavelet::radial(double r) const {
    if (family_ == Family::MexicanHat) {
        const double r2 = r * r;
        return (dim_ - r2) * std::exp(-0.5 * r2);
    }
    if (dim_ == 1)
        return 2.0 * sinc1(2.0 * r) - sinc1(r);
    return (*profile_)(r);
}

double MotherWavelet::operator()(std::span<const double> x) const {
    check_dim(*this, x.size(), "eval_mother");
    double r2 = 0.0;
    for (double v : x)
        r2 += v * v;
    if (family_ == Family::MexicanHat)
        return (dim_ - r2) * std::exp(-0.5 * r2);
    return radial(std::sqrt(r2));
}

double MotherWavelet::scaling(std::span<const double> z) const {
    check_dim(*this, z.size(), "eval_scaling");
    if (family_ == Family::MexicanHat) {
        double r2 = 0.0;
        for (double v : z)
            r2 += v * v;
        return std::exp(-0.5 * r2);
    }
    double p = 1.0;
    for (double v : z)
        p *= sinc1(v);
    return p;
}

std::vector<double> BasisIndex::center() const {
    std::vector<double> c(n.size());
    for (std::size_t i = 0; i < n.size(); ++i)
        c[i] = std::ldexp(static_cast<double>(n[i]), -m);
    return c;
}

double BasisIndex::frequency() const {
    return std::ldexp(1.0, m);
}

std::size_t BasisIndexHash::operator()(const BasisIndex& b) const noexcept {
    std::size_t h = std::hash<int>{}(b.m) * 31u + static_cast<std::size_t>(b.kind);
    for (int v : b.n)
        h = h * 1000003u ^ std::hash<int>{}(v);
    return h;
}

std::string describe(const BasisIndex& b) {
    std::ostringstream os;
    os << to_string(b.kind) << "(m=" << b.m << ", n=[";
    for (std::size_t i = 0; i < b.n.size(); ++i)
        os << (i ? "," : "") << b.n[i];
    os << "])";
    return os.str();
}

double eval_mother(const MotherWavelet& w, std::span<const double> x) {
    return w(x);
}

namespace {

// r^2 of the dilated, translated argument 2^m x - n, without allocating
double dilated_radius_sq(const BasisIndex& b, std::span<const double> x) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = std::ldexp(x[i], b.m) - b.n[i];
        r2 += z * z;
    }
    return r2;
}

double amplitude(int dim, int m) {
    // 2^{dm/2}
    return std::exp2(0.5 * dim * m);
}

}  // namespace

double eval_basis(const MotherWavelet& w, const BasisIndex& b, std::span<const double> x) {
    if (b.kind != BasisKind::Wavelet)
        throw ContractError("eval_basis: expected a wavelet index, got " + describe(b));
    check_dim(w, x.size(), "eval_basis");
    check_dim(w, b.n.size(), "eval_basis translation");
    const double r2 = dilated_radius_sq(b, x);
    const double a = amplitude(w.dim(), b.m);
    if (w.family() == Family::MexicanHat)
        return a * (w.dim() - r2) * std::exp(-0.5 * r2);
    return a * w.radial(std::sqrt(r2));
}

double eval_scaling(const MotherWavelet& w, const BasisIndex& b, std::span<const double> x) {
    if (b.kind != BasisKind::Scaling)
        throw ContractError("eval_scaling: expected a scaling index, got " + describe(b));
    check_dim(w, x.size(), "eval_scaling");
    check_dim(w, b.n.size(), "eval_scaling translation");
    const double a = amplitude(w.dim(), b.m);
    if (w.family() == Family::MexicanHat)
        return a * std::exp(-0.5 * dilated_radius_sq(b, x));
    double p = a;
    for (std::size_t i = 0; i < x.size(); ++i)
        p *= sinc1(std::ldexp(x[i], b.m) - b.n[i]);
    return p;
}

double eval(const MotherWavelet& w, const BasisIndex& b, std::span<const double> x) {
    return b.kind == BasisKind::Wavelet ? eval_basis(w, b, x) : eval_scaling(w, b, x);
}

double mother_norm_sq(const MotherWavelet& w) {
    const int d = w.dim();
    if (w.family() == Family::Sinc) {
        // Plancherel: (2pi)^{-d} |S^{d-1}| int_1^2 pi^2 rho^{d-1} d rho
        const double radial = quad::integrate_1d(
            [d](double rho) { return kPi * kPi * std::pow(rho, d - 1); }, 1.0, 2.0, 1);
        return std::pow(2.0 * kPi, -d) * sphere_area(d) * radial;
    }
    // |S^{d-1}| int_0^R psi(r)^2 r^{d-1} dr; the Gaussian factor is below
    // 1e-80 at R = 14
    auto f = [&w, d](double r) {
        const double v = w.radial(r);
        return v * v * std::pow(r, d - 1);
    };
    int panels = 8;
    double prev = quad::integrate_1d(f, 0.0, 14.0, panels);
    for (int level = 0; level < 8; ++level) {
        panels *= 2;
        const double cur = quad::integrate_1d(f, 0.0, 14.0, panels);
        if (std::abs(cur - prev) <= 1e-13 * std::abs(cur))
            return sphere_area(d) * cur;
        prev = cur;
    }
    throw QuadratureError("mother_norm_sq: radial quadrature did not converge", prev, prev);
}

GridBounds GridBounds::unbounded(std::size_t dim) {
    const double inf = std::numeric_limits<double>::infinity();
    return {std::vector<double>(dim, -inf), std::vector<double>(dim, inf)};
}

bool GridBounds::contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < low[i] || x[i] > high[i])
            return false;
    return true;
}

GridBounds make_bounds(std::span<const double> domain_low, std::span<const double> domain_high,
                       double margin, std::optional<std::vector<double>> clamp_low,
                       std::optional<std::vector<double>> clamp_high) {
    const std::size_t d = domain_low.size();
    if (d == 0 || domain_high.size() != d)
        throw ContractError("make_bounds: domain bounds must be non-empty and of equal length");
    if (!(margin >= 0.0))
        throw ContractError("make_bounds: margin must be non-negative");
    if ((clamp_low && clamp_low->size() != d) || (clamp_high && clamp_high->size() != d))
        throw ContractError("make_bounds: clamp vectors must match the domain dimension");
    GridBounds b;
    b.low.resize(d);
    b.high.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (!(domain_low[i] < domain_high[i]))
            throw ContractError("make_bounds: need domain_low < domain_high in every dimension");
        const double span = domain_high[i] - domain_low[i];
        b.low[i] = domain_low[i] - margin * span;
        b.high[i] = domain_high[i] + margin * span;
        if (clamp_low)
            b.low[i] = std::max(b.low[i], (*clamp_low)[i]);
        if (clamp_high)
            b.high[i] = std::min(b.high[i], (*clamp_high)[i]);
    }
    return b;
}

CenterGrid grid_from_axes(int m, std::vector<std::vector<int>> axes, GridBounds bounds,
                          BasisKind kind) {
    CenterGrid g;
    g.m = m;
    g.bounds = std::move(bounds);
    g.axes = std::move(axes);
    std::size_t total = 1;
    for (const auto& a : g.axes) {
        if (a.empty())
            throw ContractError("center grid is empty: degenerate bounds at resolution " +
                                std::to_string(m));
        total *= a.size();
    }
    const std::size_t d = g.axes.size();
    g.bases.reserve(total);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t count = 0; count < total; ++count) {
        std::vector<int> n(d);
        for (std::size_t k = 0; k < d; ++k)
            n[k] = g.axes[k][idx[k]];
        g.bases.emplace_back(kind, m, std::move(n));
        for (std::size_t k = d; k-- > 0;) {
            if (++idx[k] < g.axes[k].size())
                break;
            idx[k] = 0;
        }
    }
    return g;
}

CenterGrid build_center_grid(int m, const GridBounds& bounds, BasisKind kind) {
    const std::size_t d = bounds.dim();
    if (d == 0)
        throw ContractError("build_center_grid: bounds have no dimensions");
    std::vector<std::vector<int>> axes(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (!std::isfinite(bounds.low[i]) || !std::isfinite(bounds.high[i]))
            throw ContractError("build_center_grid: grid bounds must be finite");
        // lattice spacing 2^{-m} is exact in binary, so the scaled bounds are too
        const auto lo = static_cast<int>(std::ceil(std::ldexp(bounds.low[i], m)));
        const auto hi = static_cast<int>(std::floor(std::ldexp(bounds.high[i], m)));
        for (int k = lo; k <= hi; ++k)
            axes[i].push_back(k);
    }
    return grid_from_axes(m, std::move(axes), bounds, kind);
}

CenterGrid build_center_grid(int m, std::span<const double> domain_low,
                             std::span<const double> domain_high, double margin,
                             std::optional<std::vector<double>> clamp_low, BasisKind kind) {
    return build_center_grid(m, make_bounds(domain_low, domain_high, margin, std::move(clamp_low)),
                             kind);
}

std::pair<double, double> nearest_two(double x, std::span<const double> candidates, TieBreak tie,
                                      Rng* rng) {
    if (candidates.size() < 2)
        throw ContractError("nearest_two: need at least two candidates");
    if (tie == TieBreak::Random && rng == nullptr)
        throw ContractError("nearest_two: random tie-breaking needs a generator");

    std::vector<double> pool(candidates.begin(), candidates.end());
    auto take_nearest = [&]() {
        double best = std::numeric_limits<double>::infinity();
        for (double c : pool)
            best = std::min(best, std::abs(c - x));
        std::vector<std::size_t> ties;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (std::abs(pool[i] - x) == best)
                ties.push_back(i);
        std::size_t pick = ties.front();
        if (tie == TieBreak::Low) {
            for (std::size_t i : ties)
                if (pool[i] < pool[pick])
                    pick = i;
        } else {
            // sort so the draw does not depend on input order
            std::sort(ties.begin(), ties.end(),
                      [&](std::size_t a, std::size_t b) { return pool[a] < pool[b]; });
            pick = ties[rng->below(ties.size())];
        }
        const double v = pool[pick];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        return v;
    };
    const double first = take_nearest();
    const double second = take_nearest();
    return {first, second};
}

std::vector<BasisIndex> children_centers(const BasisIndex& parent, int target_m,
                                         const GridBounds& bounds, TieBreak tie, Rng* rng) {
    if (target_m != parent.m + 1)
        throw ContractError("children_centers: target resolution must be parent.m + 1");
    const std::size_t d = parent.dim();
    if (bounds.dim() != d)
        throw ContractError("children_centers: bounds dimension mismatch");

    const double h = std::ldexp(1.0, -target_m);
    std::vector<std::vector<int>> per_dim(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double c = std::ldexp(static_cast<double>(parent.n[i]), -parent.m);
        // Only lattice points within two steps can be among the nearest two.
        const int k0 = parent.n[i] * 2;
        std::vector<double> cands;
        for (int k = k0 - 2; k <= k0 + 2; ++k) {
            const double v = k * h;
            if (v >= bounds.low[i] && v <= bounds.high[i])
                cands.push_back(v);
        }
        if (cands.empty())
            return {};
        if (cands.size() == 1) {
            per_dim[i].push_back(static_cast<int>(std::lround(cands[0] / h)));
            continue;
        }
        const auto [a, b] = nearest_two(c, cands, tie, rng);
        per_dim[i].push_back(static_cast<int>(std::lround(a / h)));
        per_dim[i].push_back(static_cast<int>(std::lround(b / h)));
    }
    CenterGrid g = grid_from_axes(target_m, per_dim, bounds, BasisKind::Wavelet);
    std::sort(g.bases.begin(), g.bases.end());
    g.bases.erase(std::unique(g.bases.begin(), g.bases.end()), g.bases.end());
    return std::move(g.bases);
}

}  // namespace cwnn
