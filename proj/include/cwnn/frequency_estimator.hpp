#pragma once

/// Initial-resolution search: estimate per-resolution subspace energies from
/// a few gradient updates and stop when the smoothed energy stops rising.

#include "cwnn/datasets.hpp"
#include "cwnn/wavelet_frame.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace cwnn {

/// 2 arctan(-lg eps) / pi. Requires 0 < eps <= 1.
double alpha_from_epsilon(double eps);

/// (alpha * prev + (1 - alpha) * current) / (1 - alpha^m), as printed.
/// Note the correction is applied to an already corrected prev.
double ema_update(double prev, double current, double alpha, int m);

struct EnergyEstimate {
    double energy = 0.0;
    Eigen::VectorXd coeffs;
};

/// Sum_n C_n^2 ||psi||^2 after `updates` full-batch gradient steps from
/// zero coefficients on `bases` alone.
EnergyEstimate estimate_subspace_energy(const Dataset& data, const MotherWavelet& w,
                                        std::span<const BasisIndex> bases, double learning_rate,
                                        int updates = 1);
/// Energy of given coefficients.
double subspace_energy(const MotherWavelet& w, const Eigen::VectorXd& coeffs);

/// How kappa is compared with the kept fraction: the fraction of the whole
/// grid, or the (geometric mean) fraction kept along each axis.
enum class KappaMode { Total, PerAxis };

/// Uniform stride, shared by all axes, that keeps both ends of every axis.
/// The stride is the one whose kept fraction is closest to kappa from above
/// (the largest stride whose fraction is still >= kappa).
std::vector<BasisIndex> subsample_centers(const CenterGrid& grid, double kappa,
                                          KappaMode mode = KappaMode::Total);

struct EnergyRecord {
    int m = 0;
    double e_hat = 0.0;
    double e_bar = 0.0;
    std::size_t n_bases = 0;
};

struct EnergyTrace {
    double alpha = 0.0;
    std::vector<EnergyRecord> records;

    void write_csv(const std::filesystem::path& path) const;
};

struct EstimatorConfig {
    double kappa = 0.36;
    KappaMode kappa_mode = KappaMode::Total;
    double learning_rate = 5e-4;
    double epsilon = 0.006;
    int m_cap = 10;
    int updates = 1;  // gradient steps per probe
    std::size_t max_probe_bases = 20000;  // reaching it counts as hitting m_cap
    TieBreak tie = TieBreak::Low;
    std::uint64_t seed = 0;  // only used with TieBreak::Random
};

struct EstimateResult {
    int m_init = 0;
    EnergyTrace trace;
    bool capped = false;      // stopped at m_cap with energies still rising
    bool degenerate = false;  // every probed energy was zero
    /// The listing's "select 2^(m-1)" reading, reported alongside.
    int alternative_m = 0;
};

/// Probes grid_start.m upward. The probe set at the start resolution is
/// subsample_centers(grid_start, kappa); each next probe set is the union of
/// children_centers of the previous one inside grid_start.bounds.
/// Continues while Ebar_m < Ehat_{m+1} and m < m_cap.
EstimateResult estimate_initial_resolution(const Dataset& data, const MotherWavelet& w,
                                           const CenterGrid& grid_start,
                                           const EstimatorConfig& cfg);

/// Ehat for every resolution from grid_start.m to m_last on the same
/// children schedule, without the stopping rule.
EnergyTrace energy_profile(const Dataset& data, const MotherWavelet& w,
                           const CenterGrid& grid_start, const EstimatorConfig& cfg, int m_last);

/// Number of local maxima whose prominence exceeds `tolerance` times the
/// global maximum.
int count_peaks(std::span<const double> values, double tolerance = 0.02);

}  // namespace cwnn
