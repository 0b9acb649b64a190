#pragma once

/// Energy-driven basis growth: train to a plateau, expand the children of
/// the highest-energy wavelets into the next resolution in mu-sized energy
/// slices, and escalate the resolution when a full sweep is not enough.

#include "cwnn/datasets.hpp"
#include "cwnn/linear_model.hpp"
#include "cwnn/wavelet_frame.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cwnn {

struct GrowthConfig {
    double epsilon = 0.006;
    double zeta = 4e-5;
    double mu = 1.0 / 3.0;  // 1/mu must be a positive integer
    double learning_rate = 5e-4;
    int m_init = 2;
    int max_resolution = 6;
    long max_iters = 50000;  // gradient steps over the whole run
    std::uint64_t seed = 1;
    GridBounds bounds;       // lattice bounds shared by every resolution
    TieBreak tie = TieBreak::Low;
    bool include_scaling = true;
    std::size_t batch_size = 0;
    bool timing = false;
    // baseline only
    int wnn_start = 1;
    double wnn_seed_fraction = 1.0;
};

/// Throws ContractError naming the first bad field.
void validate(const GrowthConfig& cfg, std::size_t dim);
/// Number of mu slices, 1/mu rounded; throws if 1/mu is not an integer.
int mu_steps(double mu);

/// The active basis set together with its model and selection history.
class WaveletPool {
public:
    explicit WaveletPool(MotherWavelet w) : model_(std::move(w)) {}

    WaveletModel& model() { return model_; }
    const WaveletModel& model() const { return model_; }
    std::size_t size() const { return model_.size(); }
    bool contains(const BasisIndex& b) const { return model_.contains(b); }

    /// Inserts the new entries of `bs` with coefficient 0, in order.
    std::vector<BasisIndex> add(std::span<const BasisIndex> bs) { return model_.add_all(bs); }

    /// (basis, C^2 ||psi||^2) for every wavelet of resolution m in the pool.
    std::vector<std::pair<BasisIndex, double>> energies(int m) const;
    double subspace_energy(int m) const;

    std::set<BasisIndex>& selected(int m) { return selected_[m]; }
    const std::set<BasisIndex>* selected_at(int m) const;

private:
    WaveletModel model_;
    std::map<int, std::set<BasisIndex>> selected_;
};

/// Orders the W_m wavelets of the pool by energy (descending, ties by index),
/// drops `exclusions`, and returns the shortest prefix of the rest whose
/// energy reaches mu_up * E_m, E_m being the total over all of W_m. If the
/// target cannot be reached, every remaining basis with nonzero energy.
std::vector<BasisIndex> select_high_energy(const WaveletPool& pool, int m, double mu_up,
                                           const std::set<BasisIndex>& exclusions = {});

/// Inserts the children (at parent.m + 1) of every parent, skipping ones
/// already present, and returns what was added in insertion order.
std::vector<BasisIndex> expand_into_next(WaveletPool& pool, std::span<const BasisIndex> parents,
                                         const GridBounds& bounds, TieBreak tie = TieBreak::Low,
                                         Rng* rng = nullptr);

struct GrowthResult {
    WaveletModel model;
    TrainLog log;
    TrainStatus status = TrainStatus::Budget;
    std::string stop_reason;
    double loss = 0.0;
    long iterations = 0;
    int final_resolution = 0;
};

GrowthResult run_growth(const Dataset& data, const MotherWavelet& w, const GrowthConfig& cfg);

/// Resumes growth from an earlier result on new (typically enlarged) data:
/// same pool, resolution and log, iterations keep counting from where the
/// earlier run stopped, and cfg.max_iters bounds the combined run.
GrowthResult continue_growth(const Dataset& data, const GrowthResult& previous, const GrowthConfig& cfg);

/// Grows by whole resolutions: seed V_s and W_s (s = wnn_start), then after
/// every plateau add all of W_{m+1}.
GrowthResult run_baseline_wnn(const Dataset& data, const MotherWavelet& w, const GrowthConfig& cfg);

struct OnlineConfig {
    std::size_t window = 10;
    std::size_t memory_windows = 50;  // training buffer, in windows
    long steps_per_window = 100;
    // also grow after this many cycles above epsilon without growth; 0 disables
    long patience = 50;
};

struct OnlineRecord {
    long window = 0;     // data-collection cycle
    long steps = 0;      // gradient steps so far
    double loss = 0.0;   // buffer loss after the cycle
    std::size_t n_params = 0;
};

struct OnlineResult {
    WaveletModel model;
    TrainLog log;  // iter = cycle
    std::vector<OnlineRecord> trace;
    long total_steps = 0;
};

/// Consumes the stream in windows. Each cycle trains on the most recent
/// memory_windows windows; when the buffer loss sits above epsilon and either
/// moved by at most zeta since the previous cycle or has stayed above epsilon
/// for `patience` cycles, the next mu slice is selected and expanded,
/// escalating after a full sweep.
OnlineResult run_online(const Dataset& stream, const MotherWavelet& w, const GrowthConfig& cfg,
                        const OnlineConfig& online);

std::string model_to_json(const WaveletModel& model);
WaveletModel model_from_json(const std::string& text);

}  // namespace cwnn
