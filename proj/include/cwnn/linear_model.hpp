#pragma once

/// Linear-in-coefficients wavelet network: y(x) = sum_j c_j phi_j(x), fitted
/// by full-batch gradient descent on the mean squared error.

#include "cwnn/datasets.hpp"
#include "cwnn/wavelet_frame.hpp"

#include <Eigen/Core>

#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace cwnn {

class WaveletModel {
public:
    explicit WaveletModel(MotherWavelet mother) : mother_(std::move(mother)) {}

    const MotherWavelet& mother() const { return mother_; }
    const std::vector<BasisIndex>& bases() const { return bases_; }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    std::size_t size() const { return bases_.size(); }
    bool empty() const { return bases_.empty(); }

    bool contains(const BasisIndex& b) const { return index_.count(b) != 0; }
    std::optional<std::size_t> index_of(const BasisIndex& b) const;

    /// Appends b with the given coefficient; returns false (and changes
    /// nothing) if b is already present.
    bool add(const BasisIndex& b, double coeff = 0.0);
    /// Appends every new entry of `bs` in order with coefficient 0 and
    /// returns the ones actually added.
    std::vector<BasisIndex> add_all(std::span<const BasisIndex> bs);

    void set_coeffs(const Eigen::VectorXd& c);
    void set_coeff(std::size_t j, double v) { coeffs_(static_cast<Eigen::Index>(j)) = v; }

    double basis_value(std::size_t j, std::span<const double> x) const;
    double predict(std::span<const double> x) const;

private:
    friend class Trainer;

    MotherWavelet mother_;
    std::vector<BasisIndex> bases_;
    Eigen::VectorXd coeffs_;
    std::unordered_map<BasisIndex, std::size_t, BasisIndexHash> index_;
};

double predict(const WaveletModel& model, std::span<const double> x);
/// (1/N) sum_i (y_i - yhat_i)^2. Throws ContractError on empty data.
double loss(const WaveletModel& model, const Dataset& data);
/// dL/dc_j = -(2/N) sum_i (y_i - yhat_i) phi_j(x_i).
Eigen::VectorXd loss_gradient(const WaveletModel& model, const Dataset& data);
/// c <- c + rate (2/N) Phi^T (y - Phi c), all coefficients from the
/// pre-step values. Throws NumericError on a non-finite or runaway result
/// and leaves the model untouched.
void gradient_step(WaveletModel& model, const Dataset& data, double learning_rate);

/// Column j holds phi_j at every sample. Grows lazily with the model.
class DesignMatrix {
public:
    explicit DesignMatrix(const Dataset& data) : data_(&data) {}

    /// Appends columns for bases the model gained since the last call.
    /// The model's first cols() bases must be the ones already cached.
    void sync(const WaveletModel& model);
    const Eigen::MatrixXd& matrix() const { return phi_; }
    Eigen::Index cols() const { return phi_.cols(); }

private:
    const Dataset* data_;
    Eigen::MatrixXd phi_;
};

struct TrainOptions {
    double learning_rate = 5e-4;
    double zeta = 4e-5;     // plateau threshold on |L_k - L_{k-1}|
    double epsilon = 0.006; // target loss
    long max_iters = 50000;
    double divergence_limit = 1e12;
    std::size_t batch_size = 0;  // 0 = full batch
    bool timing = false;         // fill elapsed_ms; off keeps logs reproducible
};

enum class TrainStatus { Achieved, Plateau, Budget };
std::string to_string(TrainStatus s);

struct TrainRecord {
    long iter = 0;
    double loss = 0.0;
    std::size_t n_params = 0;
    double elapsed_ms = 0.0;
};

struct GrowthEvent {
    long iter = 0;
    std::string event;
    int resolution = 0;
    std::size_t added = 0;
};

class TrainLog {
public:
    std::vector<TrainRecord> records;
    std::vector<GrowthEvent> events;

    void record(long iter, double loss, std::size_t n_params, double elapsed_ms = 0.0);
    void event(long iter, std::string name, int resolution, std::size_t added);
    bool empty() const { return records.empty(); }
    long last_iter() const { return records.empty() ? -1 : records.back().iter; }

    void write_csv(const std::filesystem::path& path) const;
    void write_events_csv(const std::filesystem::path& path) const;
};

struct PhaseResult {
    TrainStatus status = TrainStatus::Budget;
    long steps = 0;
    double loss = 0.0;
};

/// Gradient descent over a cached design matrix. One Trainer can run many
/// phases; the model may gain bases between phases and the iteration
/// counter in the log keeps counting.
class Trainer {
public:
    Trainer(WaveletModel& model, const Dataset& data, TrainOptions opts);

    /// Runs until L <= epsilon, a plateau, or `max_steps` steps (defaults
    /// to opts.max_iters). The first call logs iteration 0.
    PhaseResult run(TrainLog& log, std::optional<long> max_steps = std::nullopt);
    /// Current loss on the training data (syncs new bases first).
    double current_loss();

    long iteration() const { return iter_; }
    /// Continues the iteration count of an earlier run.
    void resume_at(long iteration) { iter_ = iteration; }
    const TrainOptions& options() const { return opts_; }
    TrainOptions& options() { return opts_; }
    const DesignMatrix& design() const { return design_; }

private:
    double residual_loss();
    void step(Eigen::Index batch);

    WaveletModel* model_;
    const Dataset* data_;
    DesignMatrix design_;
    TrainOptions opts_;
    Eigen::VectorXd last_good_;
    Eigen::VectorXd residual_;
    long iter_ = 0;
    std::chrono::steady_clock::time_point start_;
};

struct TrainResult {
    TrainStatus status;
    TrainLog log;
    double loss;
};

/// Full plateau-terminated fit. On divergence the model keeps the last
/// good coefficients and NumericError is thrown.
TrainResult train_to_plateau(WaveletModel& model, const Dataset& data, const TrainOptions& opts);

}  // namespace cwnn
