#include "cwnn/spectral_diagnostics.hpp"

#include "cwnn/error.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>
#include <thread>

namespace cwnn {

namespace {

constexpr double pi = std::numbers::pi;

// Radial Fourier profile g with psi^(w) = g(|w|).
double spectrum(const MotherWavelet& w, double rho) {
    if (w.family() == Family::Sinc)
        return rho >= 1.0 && rho <= 2.0 ? pi : 0.0;
    return std::pow(2.0 * pi, 0.5 * w.dim()) * rho * rho * std::exp(-0.5 * rho * rho);
}

// Integral of exp(-i rho u.s) over the unit sphere, |s| = dist, z = rho * dist.
double sphere_kernel(int d, double z) {
    if (d == 1)
        return 2.0 * std::cos(z);
    if (d == 3)
        return z < 1e-8 ? 4.0 * pi : 4.0 * pi * std::sin(z) / z;
    if (z < 1e-8)
        return 2.0 * std::pow(pi, 0.5 * d) / boost::math::tgamma(0.5 * d);
    const double nu = 0.5 * d - 1.0;
    return std::pow(2.0 * pi, 0.5 * d) * std::pow(z, -nu) * boost::math::cyl_bessel_j(nu, z);
}

}  // namespace

void TimeFrequencyBox::validate() const {
    if (!(m1 < m0))
        throw ContractError("time-frequency box: need m1 < m0");
    if (T.empty() || T.size() != t_eps.size())
        throw ContractError("time-frequency box: T and t_eps must have the same nonzero length");
    for (std::size_t i = 0; i < T.size(); ++i)
        if (!(T[i] >= 0.0) || t_eps[i] < 0)
            throw ContractError("time-frequency box: T and t_eps must be nonnegative");
}

bool box_membership(const TimeFrequencyBox& box, const BasisIndex& b) {
    if (b.dim() != box.dim())
        throw ContractError("box_membership: dimension mismatch");
    if (!(box.m1 < b.m && b.m < box.m0))
        return false;
    for (std::size_t i = 0; i < b.dim(); ++i)
        if (std::abs(static_cast<double>(b.n[i])) > std::ldexp(box.T[i], b.m) + box.t_eps[i])
            return false;
    return true;
}

double inner_product(const quad::Integrand& f, const BasisIndex& b, const MotherWavelet& w,
                     const quad::Box& domain, const quad::Spec& spec) {
    if (domain.dim() != b.dim() || b.dim() != static_cast<std::size_t>(w.dim()))
        throw ContractError("inner_product: dimension mismatch");
    auto g = [&](std::span<const double> x) { return f(x) * eval(w, b, x); };
    return quad::integrate_adaptive(g, domain, spec).value;
}

double frame_inner_product(const MotherWavelet& w, const BasisIndex& a, const BasisIndex& b) {
    if (a.kind != BasisKind::Wavelet || b.kind != BasisKind::Wavelet)
        throw ContractError("frame_inner_product: wavelet bases only");
    const int d = w.dim();
    if (a.dim() != static_cast<std::size_t>(d) || b.dim() != static_cast<std::size_t>(d))
        throw ContractError("frame_inner_product: dimension mismatch");

    double dist2 = 0.0;
    for (int i = 0; i < d; ++i) {
        const double t = std::ldexp(a.n[i], -a.m) - std::ldexp(b.n[i], -b.m);
        dist2 += t * t;
    }
    const double dist = std::sqrt(dist2);

    double lo, hi;
    if (w.family() == Family::Sinc) {
        lo = std::ldexp(1.0, std::max(a.m, b.m));
        hi = std::ldexp(2.0, std::min(a.m, b.m));
        if (!(lo < hi))
            return 0.0;
    } else {
        const double sigma = 1.0 / std::sqrt(std::ldexp(1.0, -2 * a.m) + std::ldexp(1.0, -2 * b.m));
        lo = 0.0;
        hi = 14.0 * sigma;
    }
    const double scale = std::sqrt(std::ldexp(1.0, -d * (a.m + b.m))) * std::pow(2.0 * pi, -d);
    if (w.family() == Family::Sinc && d <= 3 && lo * dist > 1.0) {
        // same band, far apart: the radial integral has an elementary antiderivative
        const double s = dist;
        auto prim = [&](double r) {
            if (d == 1)
                return 2.0 * pi * pi * std::sin(r * s) / s;
            if (d == 2)
                return 2.0 * pi * pi * pi * r * boost::math::cyl_bessel_j(1, r * s) / s;
            return 4.0 * pi * pi * pi / s * (std::sin(r * s) / (s * s) - r * std::cos(r * s) / s);
        };
        return scale * (prim(hi) - prim(lo));
    }
    const int panels = 4 + static_cast<int>(std::ceil((hi - lo) * dist / pi));
    const double sa = std::ldexp(1.0, -a.m), sb = std::ldexp(1.0, -b.m);
    auto integrand = [&](double rho) {
        return spectrum(w, sa * rho) * spectrum(w, sb * rho) * std::pow(rho, d - 1) *
               sphere_kernel(d, rho * dist);
    };
    return scale * quad::integrate_1d(integrand, lo, hi, panels);
}

ScanRange scan_around(const TimeFrequencyBox& box, int extra, int n_margin) {
    box.validate();
    return {box.m1 + 1 - extra, box.m0 - 1 + extra, n_margin};
}

void DecayReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out.precision(17);
    const std::size_t d = entries.empty() ? 0 : entries.front().basis.dim();
    out << 'm';
    for (std::size_t i = 1; i <= d; ++i)
        out << ",n" << i;
    out << ",inside,coef_abs\n";
    for (const auto& e : entries) {
        out << e.basis.m;
        for (int v : e.basis.n)
            out << ',' << v;
        out << ',' << (e.inside ? 1 : 0) << ',' << std::abs(e.coef) << '\n';
    }
}

DecayReport scan_coefficients(const std::function<double(const BasisIndex&)>& coef,
                              const TimeFrequencyBox& box, const ScanRange& scan, unsigned threads) {
    box.validate();
    if (scan.m_lo > scan.m_hi || scan.n_margin < 0)
        throw ContractError("scan range: need m_lo <= m_hi and n_margin >= 0");
    DecayReport rep;
    for (int m = scan.m_lo; m <= scan.m_hi; ++m) {
        std::vector<std::vector<int>> axes;
        for (std::size_t i = 0; i < box.dim(); ++i) {
            const int r = static_cast<int>(std::floor(std::ldexp(box.T[i], m))) + box.t_eps[i] + scan.n_margin;
            std::vector<int> ax;
            for (int k = -r; k <= r; ++k)
                ax.push_back(k);
            axes.push_back(std::move(ax));
        }
        for (auto& b : grid_from_axes(m, std::move(axes), GridBounds::unbounded(box.dim())).bases)
            rep.entries.push_back({std::move(b), false, 0.0});
    }

    const std::size_t total = rep.entries.size();
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
    std::vector<std::exception_ptr> failed(workers);
    auto work = [&](unsigned id) {
        try {
            for (std::size_t i = id; i < total; i += workers) {
                auto& e = rep.entries[i];
                e.inside = box_membership(box, e.basis);
                e.coef = coef(e.basis);
            }
        } catch (...) {
            failed[id] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned id = 0; id < workers; ++id)
            pool.emplace_back(work, id);
    }
    for (const auto& e : failed)
        if (e)
            std::rethrow_exception(e);

    for (const auto& e : rep.entries) {
        double& slot = e.inside ? rep.max_inside : rep.max_outside;
        slot = std::max(slot, std::abs(e.coef));
    }
    if (rep.max_outside == 0.0)
        rep.ratio = 0.0;
    else
        rep.ratio = rep.max_inside == 0.0 ? std::numeric_limits<double>::infinity()
                                          : rep.max_outside / rep.max_inside;
    return rep;
}

DecayReport decay_report(const quad::Integrand& f, const MotherWavelet& w, const TimeFrequencyBox& box,
                         const ScanRange& scan, const quad::Box& domain, const quad::Spec& spec,
                         unsigned threads) {
    if (box.dim() != static_cast<std::size_t>(w.dim()))
        throw ContractError("decay_report: box and wavelet dimensions differ");
    return scan_coefficients(
        [&](const BasisIndex& b) { return inner_product(f, b, w, domain, spec); }, box, scan, threads);
}

DecayReport decay_report(const WaveletModel& target, const TimeFrequencyBox& box, const ScanRange& scan,
                         unsigned threads) {
    const auto& w = target.mother();
    if (box.dim() != static_cast<std::size_t>(w.dim()))
        throw ContractError("decay_report: box and wavelet dimensions differ");
    return scan_coefficients(
        [&](const BasisIndex& b) {
            double s = 0.0;
            for (std::size_t j = 0; j < target.size(); ++j)
                s += target.coeffs()(static_cast<Eigen::Index>(j)) *
                     frame_inner_product(w, b, target.bases()[j]);
            return s;
        },
        box, scan, threads);
}

EnergyIdentity energy_identity_check(const quad::Integrand& f, const MotherWavelet& w,
                                     const CenterGrid& grid, const quad::Box& domain,
                                     const quad::Spec& spec) {
    EnergyIdentity out;
    out.lhs = quad::integrate_adaptive(
                  [&](std::span<const double> x) {
                      const double v = f(x);
                      return v * v;
                  },
                  domain, spec)
                  .value;
    const double norm = w.norm_sq();
    for (const auto& b : grid.bases) {
        const double c = inner_product(f, b, w, domain, spec) / norm;
        out.rhs += c * c * norm;
    }
    const double den = std::max(std::abs(out.lhs), std::abs(out.rhs));
    out.rel_err = den == 0.0 ? 0.0 : std::abs(out.lhs - out.rhs) / den;
    return out;
}

}  // namespace cwnn
