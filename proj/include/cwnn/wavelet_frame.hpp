#pragma once

/// Radial mother wavelets, dyadic basis indices and translation lattices.
///
/// A basis function is psi_mn(x) = 2^{dm/2} psi(2^m x - n) with resolution
/// m and integer translation n; its center is 2^{-m} n and its frequency
/// 2^m. Scaling (low-pass) companions use the same dilation rule with
/// phi_s in place of psi.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cwnn {

class Rng;

enum class Family { MexicanHat, Sinc };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// Tabulated radial function r -> psi(r) on a uniform grid, cubic
/// (four-point Lagrange) interpolation, zero beyond max_radius.
struct RadialProfile {
    double step = 0.0;
    double max_radius = 0.0;
    std::vector<double> values;  ///< values[i] = psi(i * step)

    double operator()(double r) const;
};

struct SincProfileOptions {
    double step = 1e-3;
    double max_radius = 256.0;
};

/// d-dimensional radial mother wavelet with its low-pass companion.
///
/// MexicanHat: psi(x) = (d - |x|^2) exp(-|x|^2 / 2), companion exp(-|x|^2/2).
/// Sinc: Fourier transform pi on the annulus 1 <= |w| <= 2. In one dimension
/// psi(x) = 2 sinc(2x) - sinc(x); for d >= 2 the radial inverse transform is
/// integrated numerically once and tabulated. Companion: prod_i sin(x_i)/x_i.
///
/// Immutable after construction; copies share the tabulated profile.
class MotherWavelet {
public:
    static MotherWavelet mexican_hat(int dim);
    static MotherWavelet sinc(int dim, SincProfileOptions opts = {});
    static MotherWavelet make(Family family, int dim);

    Family family() const { return family_; }
    int dim() const { return dim_; }
    /// Cached ||psi||^2.
    double norm_sq() const { return norm_sq_; }

    /// psi as a function of the radius |x|.
    double radial(double r) const;
    /// psi(x); throws ContractError when x has the wrong length.
    double operator()(std::span<const double> x) const;
    /// Low-pass companion phi_s(z).
    double scaling(std::span<const double> z) const;

    /// Populated only for Sinc with d >= 2.
    const RadialProfile* profile() const { return profile_.get(); }

private:
    MotherWavelet(Family f, int d) : family_(f), dim_(d) {}

    Family family_;
    int dim_;
    double norm_sq_ = 0.0;
    std::shared_ptr<const RadialProfile> profile_;
};

enum class BasisKind : std::uint8_t { Wavelet = 0, Scaling = 1 };

std::string to_string(BasisKind k);

/// Identity of one frame element: (kind, m, n).
struct BasisIndex {
    BasisKind kind = BasisKind::Wavelet;
    int m = 0;
    std::vector<int> n;

    BasisIndex() = default;
    BasisIndex(BasisKind k, int res, std::vector<int> trans)
        : kind(k), m(res), n(std::move(trans)) {}

    static BasisIndex wavelet(int res, std::vector<int> trans) {
        return {BasisKind::Wavelet, res, std::move(trans)};
    }
    static BasisIndex scaling(int res, std::vector<int> trans) {
        return {BasisKind::Scaling, res, std::move(trans)};
    }

    std::size_t dim() const { return n.size(); }
    /// Translation center 2^{-m} n.
    std::vector<double> center() const;
    /// Frequency center 2^m.
    double frequency() const;

    friend auto operator<=>(const BasisIndex&, const BasisIndex&) = default;
    friend bool operator==(const BasisIndex&, const BasisIndex&) = default;
};

struct BasisIndexHash {
    std::size_t operator()(const BasisIndex& b) const noexcept;
};

std::string describe(const BasisIndex& b);

double eval_mother(const MotherWavelet& w, std::span<const double> x);
/// 2^{dm/2} psi(2^m x - n). Requires b.kind == Wavelet.
double eval_basis(const MotherWavelet& w, const BasisIndex& b, std::span<const double> x);
/// 2^{dm/2} phi_s(2^m x - n). Requires b.kind == Scaling.
double eval_scaling(const MotherWavelet& w, const BasisIndex& b, std::span<const double> x);
/// Dispatches on b.kind.
double eval(const MotherWavelet& w, const BasisIndex& b, std::span<const double> x);

/// ||psi||^2 by quadrature (radial reduction in space for MexicanHat, in
/// frequency for Sinc). Equals ||psi_mn||^2 for every (m, n).
double mother_norm_sq(const MotherWavelet& w);

/// Per-dimension lattice bounds in input units. Infinite bounds allowed.
struct GridBounds {
    std::vector<double> low;
    std::vector<double> high;

    static GridBounds unbounded(std::size_t dim);
    std::size_t dim() const { return low.size(); }
    bool contains(std::span<const double> x) const;
};

/// [low - margin*span, high + margin*span] per dimension, optionally
/// clamped from below and/or above.
GridBounds make_bounds(std::span<const double> domain_low, std::span<const double> domain_high,
                       double margin,
                       std::optional<std::vector<double>> clamp_low = std::nullopt,
                       std::optional<std::vector<double>> clamp_high = std::nullopt);

/// All lattice points 2^{-m} Z^d inside a bounds box.
struct CenterGrid {
    int m = 0;
    GridBounds bounds;
    /// Per-dimension lattice indices k (center k * 2^{-m}), ascending.
    std::vector<std::vector<int>> axes;
    /// Cartesian product of `axes`, first dimension slowest.
    std::vector<BasisIndex> bases;

    std::size_t size() const { return bases.size(); }
};

CenterGrid build_center_grid(int m, const GridBounds& bounds, BasisKind kind = BasisKind::Wavelet);
CenterGrid build_center_grid(int m, std::span<const double> domain_low,
                             std::span<const double> domain_high, double margin,
                             std::optional<std::vector<double>> clamp_low = std::nullopt,
                             BasisKind kind = BasisKind::Wavelet);
/// Enumerates the Cartesian product of per-axis index lists.
CenterGrid grid_from_axes(int m, std::vector<std::vector<int>> axes, GridBounds bounds,
                          BasisKind kind = BasisKind::Wavelet);

enum class TieBreak { Low, Random };

/// The nearest candidate to x and the nearest among the rest. Deterministic
/// ties go to the smaller value; TieBreak::Random draws from `rng`.
std::pair<double, double> nearest_two(double x, std::span<const double> candidates,
                                      TieBreak tie = TieBreak::Low, Rng* rng = nullptr);

/// Bases at target_m whose per-dimension centers are the nearest_two
/// lattice values to the parent's center, clipped to `bounds`. Up to 2^d
/// distinct entries, ascending order.
std::vector<BasisIndex> children_centers(const BasisIndex& parent, int target_m,
                                         const GridBounds& bounds,
                                         TieBreak tie = TieBreak::Low, Rng* rng = nullptr);

}  // namespace cwnn
