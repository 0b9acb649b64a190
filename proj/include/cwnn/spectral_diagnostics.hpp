#pragma once

/// Numerical checks of the frame picture: inner products with single
/// bases, the finite time-frequency box outside which coefficients of a
/// concentrated target are negligible, and the per-resolution energy sum.

#include "cwnn/linear_model.hpp"
#include "cwnn/quadrature.hpp"
#include "cwnn/wavelet_frame.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace cwnn {

/// (m, n) is inside iff m1 < m < m0 and |n_i| <= 2^m T_i + t_eps_i.
struct TimeFrequencyBox {
    std::vector<double> T;
    std::vector<int> t_eps;
    int m0 = 0;
    int m1 = 0;
    // user-supplied frequency descriptors, carried for reporting only
    std::optional<double> omega0;
    std::optional<double> omega1;

    std::size_t dim() const { return T.size(); }
    /// Throws ContractError on m1 >= m0, negative entries or mismatched sizes.
    void validate() const;
};

bool box_membership(const TimeFrequencyBox& box, const BasisIndex& b);

/// <psi_mn, f> over `domain` by adaptive tensor Gauss-Legendre.
double inner_product(const quad::Integrand& f, const BasisIndex& b, const MotherWavelet& w,
                     const quad::Box& domain, const quad::Spec& spec = {});

/// <psi_a, psi_b> for two wavelets, computed as a one-dimensional radial
/// integral in frequency. Exact zero for Sinc bases with disjoint bands.
double frame_inner_product(const MotherWavelet& w, const BasisIndex& a, const BasisIndex& b);

/// Resolutions m_lo..m_hi; along each axis |n_i| <= 2^m T_i + t_eps_i + n_margin.
struct ScanRange {
    int m_lo = 0;
    int m_hi = 0;
    int n_margin = 0;
};

/// The box's open resolution interval widened by `extra` on both sides.
ScanRange scan_around(const TimeFrequencyBox& box, int extra, int n_margin);

struct DecayEntry {
    BasisIndex basis;
    bool inside = false;
    double coef = 0.0;
};

struct DecayReport {
    std::vector<DecayEntry> entries;
    double max_inside = 0.0;
    double max_outside = 0.0;
    double ratio = 0.0;  // max_outside / max_inside, 0 when both vanish

    /// m,n_1..n_d,inside,coef_abs
    void write_csv(const std::filesystem::path& path) const;
};

/// Evaluates `coef` on every scanned index. Parallel over `threads`
/// workers; the entry order does not depend on the thread count.
DecayReport scan_coefficients(const std::function<double(const BasisIndex&)>& coef,
                              const TimeFrequencyBox& box, const ScanRange& scan,
                              unsigned threads = 1);

/// Coefficients by quadrature of a callable target.
DecayReport decay_report(const quad::Integrand& f, const MotherWavelet& w,
                         const TimeFrequencyBox& box, const ScanRange& scan,
                         const quad::Box& domain, const quad::Spec& spec = {},
                         unsigned threads = 1);

/// Coefficients of a finite wavelet expansion, through frame_inner_product.
DecayReport decay_report(const WaveletModel& target, const TimeFrequencyBox& box,
                         const ScanRange& scan, unsigned threads = 1);

struct EnergyIdentity {
    double lhs = 0.0;  // integral of f^2
    double rhs = 0.0;  // sum of C^2 ||psi||^2, C = <f, psi_mn> / ||psi||^2
    double rel_err = 0.0;
};

/// f should lie in the span of grid.bases (all at resolution grid.m).
EnergyIdentity energy_identity_check(const quad::Integrand& f, const MotherWavelet& w,
                                     const CenterGrid& grid, const quad::Box& domain,
                                     const quad::Spec& spec = {});

}  // namespace cwnn
