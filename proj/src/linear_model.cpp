#include "cwnn/linear_model.hpp"

#include "cwnn/error.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cwnn {

namespace {

void check_data(const WaveletModel& model, const Dataset& data, const char* what) {
    if (data.empty())
        throw ContractError(std::string(what) + ": dataset is empty");
    if (data.dim() != static_cast<std::size_t>(model.mother().dim())) {
        std::ostringstream msg;
        msg << what << ": data has dimension " << data.dim() << ", model expects "
            << model.mother().dim();
        throw ContractError(msg.str());
    }
}

Eigen::VectorXd residuals(const WaveletModel& model, const Dataset& data) {
    Eigen::VectorXd r(data.y.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        r(static_cast<Eigen::Index>(i)) = data.y(static_cast<Eigen::Index>(i)) - model.predict(data.row(i));
    return r;
}

bool runaway(const Eigen::VectorXd& c, double limit) {
    for (Eigen::Index j = 0; j < c.size(); ++j)
        if (!std::isfinite(c(j)) || std::abs(c(j)) > limit)
            return true;
    return false;
}

}  // namespace

std::optional<std::size_t> WaveletModel::index_of(const BasisIndex& b) const {
    auto it = index_.find(b);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

bool WaveletModel::add(const BasisIndex& b, double coeff) {
    if (b.dim() != static_cast<std::size_t>(mother_.dim()))
        throw ContractError("WaveletModel::add: " + describe(b) + " has the wrong dimension");
    if (!index_.emplace(b, bases_.size()).second)
        return false;
    bases_.push_back(b);
    coeffs_.conservativeResize(coeffs_.size() + 1);
    coeffs_(coeffs_.size() - 1) = coeff;
    return true;
}

std::vector<BasisIndex> WaveletModel::add_all(std::span<const BasisIndex> bs) {
    std::vector<BasisIndex> added;
    for (const auto& b : bs)
        if (add(b))
            added.push_back(b);
    return added;
}

void WaveletModel::set_coeffs(const Eigen::VectorXd& c) {
    if (static_cast<std::size_t>(c.size()) != bases_.size())
        throw ContractError("WaveletModel::set_coeffs: length mismatch");
    coeffs_ = c;
}

double WaveletModel::basis_value(std::size_t j, std::span<const double> x) const {
    return eval(mother_, bases_[j], x);
}

double WaveletModel::predict(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(mother_.dim()))
        throw ContractError("predict: input dimension mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < bases_.size(); ++j)
        s += coeffs_(static_cast<Eigen::Index>(j)) * eval(mother_, bases_[j], x);
    return s;
}

double predict(const WaveletModel& model, std::span<const double> x) {
    return model.predict(x);
}

double loss(const WaveletModel& model, const Dataset& data) {
    check_data(model, data, "loss");
    return residuals(model, data).squaredNorm() / static_cast<double>(data.size());
}

Eigen::VectorXd loss_gradient(const WaveletModel& model, const Dataset& data) {
    check_data(model, data, "loss_gradient");
    const Eigen::VectorXd r = residuals(model, data);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.size()));
    for (std::size_t j = 0; j < model.size(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i)
            s += r(static_cast<Eigen::Index>(i)) * model.basis_value(j, data.row(i));
        g(static_cast<Eigen::Index>(j)) = -2.0 * s / static_cast<double>(data.size());
    }
    return g;
}

void gradient_step(WaveletModel& model, const Dataset& data, double learning_rate) {
    if (!(learning_rate > 0.0))
        throw ContractError("gradient_step: learning rate must be positive");
    const Eigen::VectorXd next = model.coeffs() - learning_rate * loss_gradient(model, data);
    if (runaway(next, 1e12))
        throw NumericError("gradient_step: coefficients diverged (learning rate too large?)", 0);
    model.set_coeffs(next);
}

void DesignMatrix::sync(const WaveletModel& model) {
    const auto have = phi_.cols();
    const auto want = static_cast<Eigen::Index>(model.size());
    if (want < have)
        throw ContractError("DesignMatrix::sync: model lost bases");
    if (want == have)
        return;
    const auto n = static_cast<Eigen::Index>(data_->size());
    phi_.conservativeResize(n, want);
    for (Eigen::Index j = have; j < want; ++j) {
        const auto& b = model.bases()[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < n; ++i)
            phi_(i, j) = eval(model.mother(), b, data_->row(static_cast<std::size_t>(i)));
    }
}

std::string to_string(TrainStatus s) {
    switch (s) {
    case TrainStatus::Achieved:
        return "Achieved";
    case TrainStatus::Plateau:
        return "Plateau";
    case TrainStatus::Budget:
        return "Budget";
    }
    return "?";
}

void TrainLog::record(long iter, double loss_value, std::size_t n_params, double elapsed_ms) {
    if (!records.empty() && iter <= records.back().iter)
        throw ContractError("TrainLog: iterations must increase");
    records.push_back({iter, loss_value, n_params, elapsed_ms});
}

void TrainLog::event(long iter, std::string name, int resolution, std::size_t added) {
    events.push_back({iter, std::move(name), resolution, added});
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out.precision(17);
    out << "iter,loss,n_params,elapsed_ms\n";
    for (const auto& r : records)
        out << r.iter << ',' << r.loss << ',' << r.n_params << ',' << r.elapsed_ms << '\n';
}

void TrainLog::write_events_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << "iter,event,resolution,added\n";
    for (const auto& e : events)
        out << e.iter << ',' << e.event << ',' << e.resolution << ',' << e.added << '\n';
}

Trainer::Trainer(WaveletModel& model, const Dataset& data, TrainOptions opts)
    : model_(&model), data_(&data), design_(data), opts_(opts),
      start_(std::chrono::steady_clock::now()) {
    check_data(model, data, "Trainer");
    if (!(opts_.learning_rate > 0.0))
        throw ContractError("Trainer: learning rate must be positive");
    if (!(opts_.zeta > 0.0))
        throw ContractError("Trainer: zeta must be positive");
    if (!(opts_.epsilon > 0.0))
        throw ContractError("Trainer: epsilon must be positive");
}

double Trainer::residual_loss() {
    design_.sync(*model_);
    residual_ = data_->y - design_.matrix() * model_->coeffs_;
    return residual_.squaredNorm() / static_cast<double>(data_->size());
}

double Trainer::current_loss() {
    return residual_loss();
}

void Trainer::step(Eigen::Index batch) {
    const auto n = static_cast<Eigen::Index>(data_->size());
    const auto& phi = design_.matrix();
    if (opts_.batch_size == 0 || static_cast<Eigen::Index>(opts_.batch_size) >= n) {
        model_->coeffs_.noalias() +=
            (opts_.learning_rate * 2.0 / static_cast<double>(n)) * (phi.transpose() * residual_);
        return;
    }
    // contiguous mini-batch; residual_ is from the pre-step coefficients
    const auto b = static_cast<Eigen::Index>(opts_.batch_size);
    const Eigen::Index blocks = (n + b - 1) / b;
    const Eigen::Index first = (batch % blocks) * b;
    const Eigen::Index len = std::min(b, n - first);
    model_->coeffs_.noalias() +=
        (opts_.learning_rate * 2.0 / static_cast<double>(len)) *
        (phi.middleRows(first, len).transpose() * residual_.segment(first, len));
}

PhaseResult Trainer::run(TrainLog& log, std::optional<long> max_steps) {
    const long budget = max_steps.value_or(opts_.max_iters);
    auto elapsed = [&] {
        if (!opts_.timing)
            return 0.0;
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
            .count();
    };

    PhaseResult res;
    double prev = residual_loss();
    if (!std::isfinite(prev))
        throw NumericError("Trainer: non-finite initial loss", iter_);
    if (log.empty() || log.last_iter() < iter_)
        log.record(iter_, prev, model_->size(), elapsed());
    res.loss = prev;
    if (prev <= opts_.epsilon) {
        res.status = TrainStatus::Achieved;
        return res;
    }
    while (res.steps < budget) {
        last_good_ = model_->coeffs_;
        step(iter_);
        ++iter_;
        ++res.steps;
        const double cur = residual_loss();
        if (!std::isfinite(cur) || runaway(model_->coeffs_, opts_.divergence_limit)) {
            model_->coeffs_ = last_good_;
            residual_loss();
            std::ostringstream msg;
            msg << "training diverged at iteration " << iter_ << " (loss " << cur
                << "); lower the learning rate";
            throw NumericError(msg.str(), iter_);
        }
        log.record(iter_, cur, model_->size(), elapsed());
        res.loss = cur;
        if (cur <= opts_.epsilon) {
            res.status = TrainStatus::Achieved;
            return res;
        }
        if (std::abs(cur - prev) <= opts_.zeta) {
            res.status = TrainStatus::Plateau;
            return res;
        }
        prev = cur;
    }
    res.status = TrainStatus::Budget;
    return res;
}

TrainResult train_to_plateau(WaveletModel& model, const Dataset& data, const TrainOptions& opts) {
    Trainer t(model, data, opts);
    TrainResult out{TrainStatus::Budget, {}, 0.0};
    const PhaseResult r = t.run(out.log);
    out.status = r.status;
    out.loss = r.loss;
    return out;
}

}  // namespace cwnn
