#include "cwnn/frequency_estimator.hpp"

#include "cwnn/error.hpp"
#include "cwnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>

namespace cwnn {

double alpha_from_epsilon(double eps) {
    if (!(eps > 0.0 && eps <= 1.0))
        throw ContractError("alpha_from_epsilon: epsilon must lie in (0, 1]");
    return 2.0 * std::atan(-std::log10(eps)) / std::numbers::pi;
}

double ema_update(double prev, double current, double alpha, int m) {
    if (m < 2)
        throw ContractError("ema_update: m must be at least 2");
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw ContractError("ema_update: alpha must lie in [0, 1)");
    return (alpha * prev + (1.0 - alpha) * current) / (1.0 - std::pow(alpha, m));
}

double subspace_energy(const MotherWavelet& w, const Eigen::VectorXd& coeffs) {
    return coeffs.squaredNorm() * w.norm_sq();
}

EnergyEstimate estimate_subspace_energy(const Dataset& data, const MotherWavelet& w,
                                        std::span<const BasisIndex> bases, double learning_rate,
                                        int updates) {
    if (bases.empty())
        throw ContractError("estimate_subspace_energy: no bases");
    if (data.empty())
        throw ContractError("estimate_subspace_energy: dataset is empty");
    if (!(learning_rate > 0.0) || updates < 1)
        throw ContractError("estimate_subspace_energy: need a positive rate and >= 1 update");
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto p = static_cast<Eigen::Index>(bases.size());
    Eigen::MatrixXd phi(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            phi(i, j) = eval(w, bases[static_cast<std::size_t>(j)], data.row(static_cast<std::size_t>(i)));

    EnergyEstimate out;
    out.coeffs = Eigen::VectorXd::Zero(p);
    const double g = learning_rate * 2.0 / static_cast<double>(n);
    Eigen::VectorXd r = data.y;
    for (int k = 0; k < updates; ++k) {
        out.coeffs.noalias() += g * (phi.transpose() * r);
        if (!out.coeffs.allFinite())
            throw NumericError("estimate_subspace_energy: coefficients diverged", k + 1);
        r = data.y - phi * out.coeffs;
    }
    out.energy = subspace_energy(w, out.coeffs);
    return out;
}

std::vector<BasisIndex> subsample_centers(const CenterGrid& grid, double kappa, KappaMode mode) {
    if (!(kappa > 0.0 && kappa < 1.0))
        throw ContractError("subsample_centers: kappa must lie in (0, 1)");
    std::size_t longest = 1;
    for (const auto& a : grid.axes)
        longest = std::max(longest, a.size());
    const double target =
        mode == KappaMode::Total ? kappa : std::pow(kappa, static_cast<double>(grid.axes.size()));

    std::size_t best = 1;
    for (std::size_t s = 1; s < std::max<std::size_t>(longest, 2); ++s) {
        double frac = 1.0;
        bool ok = true;
        for (const auto& a : grid.axes) {
            if (a.size() == 1)
                continue;
            if ((a.size() - 1) % s != 0) {
                ok = false;
                break;
            }
            frac *= static_cast<double>((a.size() - 1) / s + 1) / static_cast<double>(a.size());
        }
        if (ok && frac >= target * (1.0 - 1e-12))
            best = s;  // fractions shrink as s grows
    }

    std::vector<std::vector<int>> axes;
    for (const auto& a : grid.axes) {
        std::vector<int> kept;
        for (std::size_t i = 0; i < a.size(); i += best)
            kept.push_back(a[i]);
        axes.push_back(std::move(kept));
    }
    return grid_from_axes(grid.m, std::move(axes), grid.bounds, BasisKind::Wavelet).bases;
}

void EnergyTrace::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out.precision(17);
    out << "m,E_hat,E_bar,n_bases\n";
    for (const auto& r : records)
        out << r.m << ',' << r.e_hat << ',' << r.e_bar << ',' << r.n_bases << '\n';
}

namespace {

std::vector<BasisIndex> next_probe(const std::vector<BasisIndex>& parents, const GridBounds& bounds,
                                   TieBreak tie, Rng* rng) {
    std::set<BasisIndex> kids;
    for (const auto& p : parents)
        for (auto& c : children_centers(p, p.m + 1, bounds, tie, rng))
            kids.insert(std::move(c));
    return {kids.begin(), kids.end()};
}

void check_config(const EstimatorConfig& cfg, const CenterGrid& grid) {
    if (!(cfg.learning_rate > 0.0))
        throw ContractError("estimator: learning rate must be positive");
    if (cfg.updates < 1)
        throw ContractError("estimator: updates must be at least 1");
    if (cfg.m_cap < grid.m + 1)
        throw ContractError("estimator: m_cap must exceed the start resolution");
}

}  // namespace

EstimateResult estimate_initial_resolution(const Dataset& data, const MotherWavelet& w,
                                           const CenterGrid& grid_start,
                                           const EstimatorConfig& cfg) {
    check_config(cfg, grid_start);
    EstimateResult res;
    res.trace.alpha = alpha_from_epsilon(cfg.epsilon);
    const double alpha = res.trace.alpha;
    std::optional<Rng> rng;
    if (cfg.tie == TieBreak::Random)
        rng.emplace(cfg.seed);
    Rng* rp = rng ? &*rng : nullptr;

    const int start = grid_start.m;
    std::vector<BasisIndex> probe = subsample_centers(grid_start, cfg.kappa, cfg.kappa_mode);
    double e_hat = estimate_subspace_energy(data, w, probe, cfg.learning_rate, cfg.updates).energy;
    double e_bar = e_hat;
    res.trace.records.push_back({start, e_hat, e_bar, probe.size()});
    bool all_zero = e_hat == 0.0;

    int m = start;
    for (;;) {
        if (m >= cfg.m_cap) {
            res.capped = true;
            break;
        }
        probe = next_probe(probe, grid_start.bounds, cfg.tie, rp);
        if (probe.empty())
            break;
        if (probe.size() > cfg.max_probe_bases) {
            res.capped = true;
            break;
        }
        const double next = estimate_subspace_energy(data, w, probe, cfg.learning_rate, cfg.updates).energy;
        all_zero = all_zero && next == 0.0;
        // local index j counts from 1 at the start resolution
        const int j = m + 1 - start + 1;
        const double next_bar = ema_update(e_bar, next, alpha, j);
        res.trace.records.push_back({m + 1, next, next_bar, probe.size()});
        if (!(e_bar < next))
            break;
        e_bar = next_bar;
        ++m;
    }
    res.m_init = m;
    res.alternative_m = m - 1;
    res.degenerate = all_zero;
    return res;
}

EnergyTrace energy_profile(const Dataset& data, const MotherWavelet& w, const CenterGrid& grid_start,
                           const EstimatorConfig& cfg, int m_last) {
    if (m_last < grid_start.m)
        throw ContractError("energy_profile: m_last below the start resolution");
    if (!(cfg.learning_rate > 0.0) || cfg.updates < 1)
        throw ContractError("energy_profile: need a positive rate and >= 1 update");
    EnergyTrace trace;
    trace.alpha = alpha_from_epsilon(cfg.epsilon);
    std::optional<Rng> rng;
    if (cfg.tie == TieBreak::Random)
        rng.emplace(cfg.seed);
    std::vector<BasisIndex> probe = subsample_centers(grid_start, cfg.kappa, cfg.kappa_mode);
    double e_bar = 0.0;
    for (int m = grid_start.m; m <= m_last; ++m) {
        if (m > grid_start.m)
            probe = next_probe(probe, grid_start.bounds, cfg.tie, rng ? &*rng : nullptr);
        if (probe.empty())
            break;
        const double e = estimate_subspace_energy(data, w, probe, cfg.learning_rate, cfg.updates).energy;
        e_bar = m == grid_start.m ? e : ema_update(e_bar, e, trace.alpha, m - grid_start.m + 1);
        trace.records.push_back({m, e, e_bar, probe.size()});
    }
    return trace;
}

int count_peaks(std::span<const double> v, double tolerance) {
    if (v.empty())
        return 0;
    const double top = *std::max_element(v.begin(), v.end());
    const std::size_t n = v.size();
    int peaks = 0;
    std::size_t i = 0;
    while (i < n) {
        // treat a run of equal values as one candidate
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i])
            ++j;
        const bool left_ok = i == 0 || v[i - 1] < v[i];
        const bool right_ok = j + 1 == n || v[j + 1] < v[i];
        if (left_ok && right_ok) {
            // lowest point before reaching something higher, on each side
            std::optional<double> lmin, rmin;
            for (std::size_t k = i; k-- > 0;) {
                if (v[k] > v[i])
                    break;
                lmin = lmin ? std::min(*lmin, v[k]) : v[k];
            }
            for (std::size_t k = j + 1; k < n; ++k) {
                if (v[k] > v[i])
                    break;
                rmin = rmin ? std::min(*rmin, v[k]) : v[k];
            }
            double base;
            if (lmin && rmin)
                base = std::max(*lmin, *rmin);
            else if (lmin)
                base = *lmin;
            else if (rmin)
                base = *rmin;
            else
                base = 0.0;
            if (v[i] - base > tolerance * std::abs(top) || (!lmin && !rmin))
                ++peaks;
        }
        i = j + 1;
    }
    return peaks;
}

}  // namespace cwnn
