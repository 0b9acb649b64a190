#include "cwnn/growth_engine.hpp"

#include "cwnn/error.hpp"
#include "cwnn/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace cwnn {

using nlohmann::json;

int mu_steps(double mu) {
    if (!(mu > 0.0 && mu <= 1.0))
        throw ContractError("mu must lie in (0, 1]");
    const double q = 1.0 / mu;
    const long r = std::lround(q);
    if (r < 1 || std::abs(q - static_cast<double>(r)) > 1e-9 * q)
        throw ContractError("1/mu must be a positive integer");
    return static_cast<int>(r);
}

void validate(const GrowthConfig& cfg, std::size_t dim) {
    auto bad = [](const std::string& field, const std::string& why) {
        throw ContractError("growth config: '" + field + "' " + why);
    };
    if (!(cfg.epsilon > 0.0))
        bad("epsilon", "must be positive");
    if (!(cfg.zeta > 0.0))
        bad("zeta", "must be positive");
    if (!(cfg.learning_rate > 0.0))
        bad("learning_rate", "must be positive");
    try {
        mu_steps(cfg.mu);
    } catch (const ContractError&) {
        bad("mu", "must be the reciprocal of a positive integer");
    }
    if (cfg.max_iters < 1)
        bad("max_iters", "must be at least 1");
    if (cfg.max_resolution < cfg.m_init)
        bad("max_resolution", "is below m_init");
    if (cfg.bounds.dim() != dim)
        bad("bounds", "do not match the data dimension");
    if (!(cfg.wnn_seed_fraction > 0.0 && cfg.wnn_seed_fraction <= 1.0))
        bad("wnn_seed_fraction", "must lie in (0, 1]");
}

std::vector<std::pair<BasisIndex, double>> WaveletPool::energies(int m) const {
    std::vector<std::pair<BasisIndex, double>> out;
    const double norm = model_.mother().norm_sq();
    for (std::size_t j = 0; j < model_.size(); ++j) {
        const auto& b = model_.bases()[j];
        if (b.kind == BasisKind::Wavelet && b.m == m) {
            const double c = model_.coeffs()(static_cast<Eigen::Index>(j));
            out.emplace_back(b, c * c * norm);
        }
    }
    return out;
}

double WaveletPool::subspace_energy(int m) const {
    double s = 0.0;
    for (const auto& [b, e] : energies(m))
        s += e;
    return s;
}

const std::set<BasisIndex>* WaveletPool::selected_at(int m) const {
    auto it = selected_.find(m);
    return it == selected_.end() ? nullptr : &it->second;
}

std::vector<BasisIndex> select_high_energy(const WaveletPool& pool, int m, double mu_up,
                                           const std::set<BasisIndex>& exclusions) {
    if (!(mu_up > 0.0 && mu_up <= 1.0 + 1e-12))
        throw ContractError("select_high_energy: mu_up must lie in (0, 1]");
    auto en = pool.energies(m);
    double total = 0.0;
    for (const auto& [b, e] : en)
        total += e;
    std::sort(en.begin(), en.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    const double target = mu_up * total;
    std::vector<BasisIndex> out;
    double cum = 0.0;
    for (const auto& [b, e] : en) {
        if (exclusions.count(b))
            continue;
        if (cum >= target || e == 0.0)
            break;
        out.push_back(b);
        cum += e;
    }
    return out;
}

std::vector<BasisIndex> expand_into_next(WaveletPool& pool, std::span<const BasisIndex> parents,
                                         const GridBounds& bounds, TieBreak tie, Rng* rng) {
    std::vector<BasisIndex> added;
    if (parents.empty())
        return added;
    const int m = parents.front().m;
    for (const auto& p : parents) {
        if (p.m != m || p.kind != BasisKind::Wavelet)
            throw ContractError("expand_into_next: parents must be wavelets of one resolution");
        const auto kids = children_centers(p, m + 1, bounds, tie, rng);
        for (const auto& k : pool.add(kids))
            added.push_back(k);
    }
    return added;
}

namespace {

std::vector<BasisIndex> grid_bases(int m, const GridBounds& bounds, bool scaling) {
    std::vector<BasisIndex> out;
    if (scaling) {
        auto v = build_center_grid(m, bounds, BasisKind::Scaling);
        out.insert(out.end(), v.bases.begin(), v.bases.end());
    }
    auto w = build_center_grid(m, bounds, BasisKind::Wavelet);
    out.insert(out.end(), w.bases.begin(), w.bases.end());
    return out;
}

TrainOptions train_options(const GrowthConfig& cfg) {
    TrainOptions o;
    o.learning_rate = cfg.learning_rate;
    o.zeta = cfg.zeta;
    o.epsilon = cfg.epsilon;
    o.max_iters = cfg.max_iters;
    o.batch_size = cfg.batch_size;
    o.timing = cfg.timing;
    return o;
}

// Runs one training phase against the remaining global budget.
PhaseResult phase(Trainer& t, TrainLog& log, const GrowthConfig& cfg) {
    const long left = cfg.max_iters - t.iteration();
    return t.run(log, std::max(0L, left));
}

GrowthResult finish(WaveletPool& pool, TrainLog& log, const PhaseResult& r, const Trainer& t, int m,
                    std::string reason) {
    GrowthResult g{pool.model(), std::move(log), r.status, std::move(reason), r.loss, t.iteration(), m};
    if (g.status == TrainStatus::Plateau)
        g.status = TrainStatus::Budget;
    return g;
}

}  // namespace

namespace {

GrowthResult grow(WaveletPool& pool, TrainLog& log, Trainer& t, int m, const GrowthConfig& cfg) {
    std::optional<Rng> rng;
    if (cfg.tie == TieBreak::Random)
        rng.emplace(cfg.seed);
    Rng* rp = rng ? &*rng : nullptr;
    const int slices = mu_steps(cfg.mu);

    PhaseResult r = phase(t, log, cfg);
    for (;;) {
        if (r.status == TrainStatus::Achieved)
            return finish(pool, log, r, t, m, "accuracy reached");
        if (r.status == TrainStatus::Budget)
            return finish(pool, log, r, t, m, "iteration budget exhausted");
        for (int k = 1; k <= slices; ++k) {
            const double mu_up = k == slices ? 1.0 : static_cast<double>(k) / slices;
            auto& sel = pool.selected(m);
            const auto parents = select_high_energy(pool, m, mu_up, sel);
            sel.insert(parents.begin(), parents.end());
            const auto added = expand_into_next(pool, parents, cfg.bounds, cfg.tie, rp);
            log.event(t.iteration(), "expand", m + 1, added.size());
            r = phase(t, log, cfg);
            if (r.status == TrainStatus::Achieved)
                return finish(pool, log, r, t, m, "accuracy reached");
            if (r.status == TrainStatus::Budget)
                return finish(pool, log, r, t, m, "iteration budget exhausted");
        }
        if (m + 1 > cfg.max_resolution)
            return finish(pool, log, r, t, m, "resolution cap reached");
        ++m;
        const auto grid = grid_bases(m, cfg.bounds, cfg.include_scaling);
        log.event(t.iteration(), "escalate", m, pool.add(grid).size());
        r = phase(t, log, cfg);
    }
}

}  // namespace

GrowthResult run_growth(const Dataset& data, const MotherWavelet& w, const GrowthConfig& cfg) {
    validate(cfg, data.dim());
    WaveletPool pool(w);
    TrainLog log;
    const int m = cfg.m_init;
    log.event(0, "seed", m, pool.add(grid_bases(m, cfg.bounds, cfg.include_scaling)).size());
    Trainer t(pool.model(), data, train_options(cfg));
    return grow(pool, log, t, m, cfg);
}

GrowthResult continue_growth(const Dataset& data, const GrowthResult& previous, const GrowthConfig& cfg) {
    validate(cfg, data.dim());
    WaveletPool pool(previous.model.mother());
    pool.model() = previous.model;
    TrainLog log = previous.log;
    log.event(previous.iterations, "new_data", previous.final_resolution, 0);
    Trainer t(pool.model(), data, train_options(cfg));
    t.resume_at(previous.iterations);
    return grow(pool, log, t, previous.final_resolution, cfg);
}

GrowthResult run_baseline_wnn(const Dataset& data, const MotherWavelet& w, const GrowthConfig& cfg) {
    validate(cfg, data.dim());
    WaveletPool pool(w);
    TrainLog log;
    int m = cfg.wnn_start;

    std::vector<BasisIndex> seed;
    if (cfg.include_scaling) {
        const auto v = build_center_grid(m, cfg.bounds, BasisKind::Scaling);
        seed = v.bases;
    }
    auto wm = build_center_grid(m, cfg.bounds, BasisKind::Wavelet).bases;
    if (cfg.wnn_seed_fraction < 1.0) {
        Rng rng(cfg.seed);
        std::vector<std::size_t> idx(wm.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            idx[i] = i;
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.below(i)]);
        const auto keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(cfg.wnn_seed_fraction * static_cast<double>(wm.size()))));
        idx.resize(keep);
        std::sort(idx.begin(), idx.end());
        std::vector<BasisIndex> sub;
        for (std::size_t i : idx)
            sub.push_back(wm[i]);
        wm = std::move(sub);
    }
    seed.insert(seed.end(), wm.begin(), wm.end());
    log.event(0, "seed", m, pool.add(seed).size());
    Trainer t(pool.model(), data, train_options(cfg));

    for (;;) {
        const PhaseResult r = phase(t, log, cfg);
        if (r.status == TrainStatus::Achieved)
            return finish(pool, log, r, t, m, "accuracy reached");
        if (r.status == TrainStatus::Budget)
            return finish(pool, log, r, t, m, "iteration budget exhausted");
        if (m + 1 > cfg.max_resolution)
            return finish(pool, log, r, t, m, "resolution cap reached");
        ++m;
        const auto next = build_center_grid(m, cfg.bounds, BasisKind::Wavelet).bases;
        log.event(t.iteration(), "add_resolution", m, pool.add(next).size());
    }
}

namespace {

// Sliding training buffer: the last `capacity` samples stored in ring order
// with their design-matrix rows.
class RingBuffer {
public:
    RingBuffer(std::size_t capacity, std::size_t dim)
        : x_(static_cast<Eigen::Index>(capacity), static_cast<Eigen::Index>(dim)),
          y_(static_cast<Eigen::Index>(capacity)), cap_(capacity) {}

    void push(std::span<const double> x, double y, const WaveletModel& model) {
        const auto slot = static_cast<Eigen::Index>(next_ % cap_);
        for (std::size_t j = 0; j < x.size(); ++j)
            x_(slot, static_cast<Eigen::Index>(j)) = x[j];
        y_(slot) = y;
        if (phi_.cols() != static_cast<Eigen::Index>(model.size()))
            sync(model);
        for (Eigen::Index j = 0; j < phi_.cols(); ++j)
            phi_(slot, j) = eval(model.mother(), model.bases()[static_cast<std::size_t>(j)], x);
        ++next_;
    }

    void sync(const WaveletModel& model) {
        const auto have = phi_.cols();
        const auto want = static_cast<Eigen::Index>(model.size());
        if (have == want)
            return;
        phi_.conservativeResize(static_cast<Eigen::Index>(cap_), want);
        const auto rows = filled();
        std::vector<double> row(static_cast<std::size_t>(x_.cols()));
        for (Eigen::Index j = have; j < want; ++j) {
            const auto& b = model.bases()[static_cast<std::size_t>(j)];
            for (Eigen::Index i = 0; i < rows; ++i) {
                for (Eigen::Index k = 0; k < x_.cols(); ++k)
                    row[static_cast<std::size_t>(k)] = x_(i, k);
                phi_(i, j) = eval(model.mother(), b, row);
            }
        }
    }

    Eigen::Index filled() const { return static_cast<Eigen::Index>(std::min(next_, cap_)); }
    auto phi() const { return phi_.topRows(filled()); }
    auto y() const { return y_.head(filled()); }

private:
    RowMatrix x_;
    Eigen::VectorXd y_;
    Eigen::MatrixXd phi_;
    std::size_t cap_;
    std::size_t next_ = 0;
};

}  // namespace

OnlineResult run_online(const Dataset& stream, const MotherWavelet& w, const GrowthConfig& cfg,
                        const OnlineConfig& online) {
    validate(cfg, stream.dim());
    if (online.window < 1)
        throw ContractError("online: window must be at least 1");
    if (online.memory_windows < 1)
        throw ContractError("online: memory_windows must be at least 1");
    if (online.steps_per_window < 1)
        throw ContractError("online: steps_per_window must be at least 1");
    std::optional<Rng> rng;
    if (cfg.tie == TieBreak::Random)
        rng.emplace(cfg.seed);
    Rng* rp = rng ? &*rng : nullptr;
    const int slices = mu_steps(cfg.mu);

    WaveletPool pool(w);
    OnlineResult out{pool.model(), {}, {}, 0};
    int m = cfg.m_init;
    out.log.event(0, "seed", m, pool.add(grid_bases(m, cfg.bounds, cfg.include_scaling)).size());

    RingBuffer buf(online.window * online.memory_windows, stream.dim());
    WaveletModel& model = pool.model();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.size()));
    Eigen::VectorXd r;
    std::optional<double> prev;
    int slice = 1;
    long cycle = 0;
    long waiting = 0;  // cycles above epsilon since the last growth

    for (std::size_t first = 0; first < stream.size(); first += online.window, ++cycle) {
        const std::size_t last = std::min(stream.size(), first + online.window);
        for (std::size_t i = first; i < last; ++i)
            buf.push(stream.row(i), stream.y(static_cast<Eigen::Index>(i)), model);

        const auto phi = buf.phi();
        const auto y = buf.y();
        const double scale = cfg.learning_rate * 2.0 / static_cast<double>(buf.filled());
        double loss_value = 0.0;
        for (long s = 0;; ++s) {
            r = y - phi * c;
            loss_value = r.squaredNorm() / static_cast<double>(buf.filled());
            if (!std::isfinite(loss_value))
                throw NumericError("online training diverged; lower the learning rate", out.total_steps);
            if (s == online.steps_per_window || loss_value <= cfg.epsilon)
                break;
            c.noalias() += scale * (phi.transpose() * r);
            ++out.total_steps;
        }
        model.set_coeffs(c);
        out.log.record(cycle, loss_value, model.size());
        out.trace.push_back({cycle, out.total_steps, loss_value, model.size()});

        const bool above = loss_value > cfg.epsilon;
        waiting = above ? waiting + 1 : 0;
        const bool flat = prev && std::abs(loss_value - *prev) <= cfg.zeta;
        prev = loss_value;
        if (!above || !(flat || (online.patience > 0 && waiting >= online.patience)))
            continue;
        waiting = 0;
        const double mu_up = slice == slices ? 1.0 : static_cast<double>(slice) / slices;
        auto& sel = pool.selected(m);
        const auto parents = select_high_energy(pool, m, mu_up, sel);
        sel.insert(parents.begin(), parents.end());
        const auto added = expand_into_next(pool, parents, cfg.bounds, cfg.tie, rp);
        out.log.event(cycle, "expand", m + 1, added.size());
        if (++slice > slices) {
            slice = 1;
            if (m + 1 <= cfg.max_resolution) {
                ++m;
                const auto grown = pool.add(grid_bases(m, cfg.bounds, cfg.include_scaling));
                out.log.event(cycle, "escalate", m, grown.size());
            }
        }
        buf.sync(model);
        c = model.coeffs();
    }
    out.model = model;
    return out;
}

std::string model_to_json(const WaveletModel& model) {
    json j;
    const auto& w = model.mother();
    j["family"] = to_string(w.family());
    j["dim"] = w.dim();
    if (const auto* p = w.profile())
        j["profile"] = {{"step", p->step}, {"max_radius", p->max_radius}};
    j["bases"] = json::array();
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto& b = model.bases()[i];
        j["bases"].push_back({{"kind", to_string(b.kind)},
                              {"m", b.m},
                              {"n", b.n},
                              {"coeff", model.coeffs()(static_cast<Eigen::Index>(i))}});
    }
    return j.dump(1);
}

WaveletModel model_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        const Family f = family_from_string(j.at("family").get<std::string>());
        const int d = j.at("dim").get<int>();
        std::optional<MotherWavelet> w;
        if (f == Family::Sinc && j.contains("profile")) {
            SincProfileOptions o;
            o.step = j["profile"].at("step").get<double>();
            o.max_radius = j["profile"].at("max_radius").get<double>();
            w = MotherWavelet::sinc(d, o);
        } else {
            w = MotherWavelet::make(f, d);
        }
        WaveletModel model(*w);
        for (const auto& b : j.at("bases")) {
            const std::string kind = b.at("kind").get<std::string>();
            if (kind != "wavelet" && kind != "scaling")
                throw ContractError("model json: unknown basis kind '" + kind + "'");
            BasisIndex idx(kind == "wavelet" ? BasisKind::Wavelet : BasisKind::Scaling,
                           b.at("m").get<int>(), b.at("n").get<std::vector<int>>());
            if (!model.add(idx, b.at("coeff").get<double>()))
                throw ContractError("model json: duplicate basis " + describe(idx));
        }
        return model;
    } catch (const json::exception& e) {
        throw ContractError(std::string("model json: ") + e.what());
    }
}

}  // namespace cwnn
