#include "doctest.h"

#include "cwnn/error.hpp"
#include "cwnn/growth_engine.hpp"
#include "cwnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace cwnn;

namespace {

// Pool of 1-D wavelets at resolution 1 with prescribed energies.
WaveletPool pool_with(const std::vector<double>& energies) {
    WaveletPool pool(MotherWavelet::mexican_hat(1));
    const double norm = pool.model().mother().norm_sq();
    for (std::size_t i = 0; i < energies.size(); ++i)
        pool.model().add(BasisIndex::wavelet(1, {static_cast<int>(i)}), std::sqrt(energies[i] / norm));
    return pool;
}

std::vector<int> translations(const std::vector<BasisIndex>& bs) {
    std::vector<int> out;
    for (const auto& b : bs)
        out.push_back(b.n[0]);
    return out;
}

GrowthConfig d1_config(double eps, double mu) {
    GrowthConfig c;
    c.epsilon = eps;
    c.mu = mu;
    const std::vector<double> lo{0.0, 0.0}, hi{1.0, 1.0};
    c.bounds = make_bounds(lo, hi, 1.0, std::vector<double>{0.0, 0.0});
    return c;
}

Dataset d1_train() {
    return split(gen_example1(Example1Variant::D1, 1000, 1), 0.8, 1).first;
}

}  // namespace

TEST_CASE("mu slices and config validation") {
    CHECK(mu_steps(1.0 / 3.0) == 3);
    CHECK(mu_steps(0.5) == 2);
    CHECK(mu_steps(1.0) == 1);
    CHECK_THROWS_AS(mu_steps(0.3), ContractError);
    CHECK_THROWS_AS(mu_steps(0.0), ContractError);

    auto cfg = d1_config(0.006, 1.0 / 3.0);
    CHECK_NOTHROW(validate(cfg, 2));
    auto named = [&](GrowthConfig c, const std::string& field) {
        try {
            validate(c, 2);
        } catch (const ContractError& e) {
            return std::string(e.what()).find("'" + field + "'") != std::string::npos;
        }
        return false;
    };
    auto c = cfg;
    c.epsilon = -1;
    CHECK(named(c, "epsilon"));
    c = cfg;
    c.mu = 0.4;
    CHECK(named(c, "mu"));
    c = cfg;
    c.max_resolution = 1;
    CHECK(named(c, "max_resolution"));
    CHECK_THROWS_AS(validate(cfg, 3), ContractError);
}

TEST_CASE("select_high_energy examples") {
    const auto pool = pool_with({4, 3, 2, 1});
    CHECK(translations(select_high_energy(pool, 1, 0.5)) == std::vector<int>{0, 1});
    CHECK(translations(select_high_energy(pool, 1, 1.0)) == std::vector<int>{0, 1, 2, 3});
    const std::set<BasisIndex> ex{BasisIndex::wavelet(1, {0})};
    CHECK(translations(select_high_energy(pool, 1, 0.5, ex)) == std::vector<int>{1, 2});
    CHECK(select_high_energy(pool, 2, 0.5).empty());
    // order of insertion does not matter, ties go to the smaller index
    const auto tied = pool_with({1, 2, 2, 1});
    CHECK(translations(select_high_energy(tied, 1, 0.3)) == std::vector<int>{1});
    CHECK(translations(select_high_energy(tied, 1, 0.6)) == std::vector<int>{1, 2});
    CHECK_THROWS_AS(select_high_energy(pool, 1, 0.0), ContractError);
}

TEST_CASE("select_high_energy against brute force") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(9);
        std::vector<double> e(n);
        for (auto& v : e)
            v = rng.below(4) == 0 ? 0.0 : rng.uniform(0.0, 5.0);
        const auto pool = pool_with(e);
        std::set<BasisIndex> ex;
        for (std::size_t i = 0; i < n; ++i)
            if (rng.below(4) == 0)
                ex.insert(BasisIndex::wavelet(1, {static_cast<int>(i)}));
        const double mu = rng.uniform(0.05, 1.0);

        // oracle: stored energies, descending, ties by index
        const auto stored = pool.energies(1);
        double total = 0.0;
        for (const auto& [b, v] : stored)
            total += v;
        std::vector<std::pair<double, int>> order;
        for (const auto& [b, v] : stored)
            order.push_back({-v, b.n[0]});
        std::sort(order.begin(), order.end());
        std::vector<int> want;
        double cum = 0.0;
        for (const auto& [neg, idx] : order) {
            if (ex.count(BasisIndex::wavelet(1, {idx})))
                continue;
            if (cum >= mu * total || neg == 0.0)
                break;
            want.push_back(idx);
            cum += -neg;
        }
        CHECK(translations(select_high_energy(pool, 1, mu, ex)) == want);
    }
}

TEST_CASE("a full mu sweep selects each nonzero basis once") {
    const auto pool = pool_with({0.5, 3, 0, 2, 2, 7, 0.1, 0});
    std::set<BasisIndex> chosen;
    for (int k = 1; k <= 4; ++k) {
        const double mu_up = k == 4 ? 1.0 : k / 4.0;
        for (const auto& b : select_high_energy(pool, 1, mu_up, chosen))
            CHECK(chosen.insert(b).second);
    }
    std::set<BasisIndex> nonzero;
    for (const auto& [b, e] : pool.energies(1))
        if (e > 0.0)
            nonzero.insert(b);
    CHECK(chosen == nonzero);
}

TEST_CASE("expand_into_next") {
    SUBCASE("one 2-D parent, empty pool") {
        WaveletPool pool(MotherWavelet::sinc(2));
        const std::vector<BasisIndex> parents{BasisIndex::wavelet(1, {1, 1})};
        const auto added = expand_into_next(pool, parents, GridBounds::unbounded(2));
        CHECK(added.size() == 4);
        CHECK(expand_into_next(pool, parents, GridBounds::unbounded(2)).empty());
    }
    SUBCASE("adjacent 1-D parents share a child at a clamped edge") {
        // parent 0 loses -0.25 to the bound and takes 0.25, which parent 0.5 also takes
        WaveletPool pool(MotherWavelet::mexican_hat(1));
        const std::vector<BasisIndex> parents{BasisIndex::wavelet(1, {0}), BasisIndex::wavelet(1, {1})};
        const std::vector<double> lo{0.0}, hi{2.0};
        const auto added = expand_into_next(pool, parents, make_bounds(lo, hi, 0.0));
        CHECK(translations(added) == std::vector<int>{0, 1, 2});
        CHECK(added.size() < 4);
        CHECK(added.size() == 3);
        std::set<BasisIndex> unique(added.begin(), added.end());
        CHECK(unique.size() == added.size());
    }
    SUBCASE("children sit next to their parent") {
        WaveletPool pool(MotherWavelet::sinc(2));
        Rng rng(4);
        for (int trial = 0; trial < 50; ++trial) {
            const int m = static_cast<int>(rng.below(4));
            const BasisIndex p = BasisIndex::wavelet(m, {static_cast<int>(rng.below(9)) - 4,
                                                         static_cast<int>(rng.below(9)) - 4});
            for (const auto& c : children_centers(p, m + 1, GridBounds::unbounded(2))) {
                for (std::size_t i = 0; i < 2; ++i)
                    CHECK(std::abs(c.center()[i] - p.center()[i]) <= std::ldexp(1.0, -(m + 1)));
            }
        }
    }
    WaveletPool pool(MotherWavelet::mexican_hat(1));
    const std::vector<BasisIndex> mixed{BasisIndex::wavelet(1, {0}), BasisIndex::wavelet(2, {0})};
    CHECK_THROWS_AS(expand_into_next(pool, mixed, GridBounds::unbounded(1)), ContractError);
}

TEST_CASE("representable target: no growth") {
    const auto w = MotherWavelet::mexican_hat(1);
    const auto target = BasisIndex::wavelet(0, {1});
    Dataset ds;
    const int n = 41;
    ds.x.resize(n, 1);
    ds.y.resize(n);
    for (int i = 0; i < n; ++i) {
        ds.x(i, 0) = -1.0 + 3.0 * i / (n - 1);
        ds.y(i) = eval(w, target, ds.row(static_cast<std::size_t>(i)));
    }
    GrowthConfig cfg;
    cfg.epsilon = 1e-6;
    cfg.zeta = 1e-14;
    cfg.learning_rate = 0.5;
    cfg.m_init = 0;
    cfg.max_resolution = 2;
    const std::vector<double> lo{0.0}, hi{1.0};
    cfg.bounds = make_bounds(lo, hi, 0.0);
    for (auto run : {run_growth, run_baseline_wnn}) {
        if (run == run_baseline_wnn)
            cfg.wnn_start = 0;
        const auto r = run(ds, w, cfg);
        CHECK(r.status == TrainStatus::Achieved);
        CHECK(r.loss <= 1e-6);
        REQUIRE(r.log.events.size() == 1);
        CHECK(r.log.events[0].event == "seed");
        CHECK(r.model.size() == 4);
    }
}

TEST_CASE("D1: growth against the full-grid baseline") {
    const auto train = d1_train();
    const auto w = MotherWavelet::sinc(2);
    const auto cfg = d1_config(0.006, 1.0 / 3.0);
    const auto cw = run_growth(train, w, cfg);
    const auto wnn = run_baseline_wnn(train, w, cfg);
    CHECK(cw.status == TrainStatus::Achieved);
    CHECK(wnn.status == TrainStatus::Achieved);
    CHECK(cw.loss <= 0.006);
    CHECK(cw.log.records.back().loss <= 0.006);
    CHECK(cw.model.size() < wnn.model.size());

    // the pool only grows, iterations strictly increase, no duplicates
    bool mono = true;
    for (std::size_t i = 1; i < cw.log.records.size(); ++i)
        mono = mono && cw.log.records[i].n_params >= cw.log.records[i - 1].n_params &&
               cw.log.records[i].iter > cw.log.records[i - 1].iter;
    CHECK(mono);
    std::set<BasisIndex> unique(cw.model.bases().begin(), cw.model.bases().end());
    CHECK(unique.size() == cw.model.size());
    CHECK(cw.log.records.back().n_params == cw.model.size());
    // stored loss agrees with a fresh evaluation
    CHECK(loss(cw.model, train) == doctest::Approx(cw.loss).epsilon(1e-9));

    const auto again = run_growth(train, w, cfg);
    REQUIRE(again.log.records.size() == cw.log.records.size());
    bool same = true;
    for (std::size_t i = 0; i < cw.log.records.size(); ++i)
        same = same && again.log.records[i].loss == cw.log.records[i].loss;
    CHECK(same);
    CHECK(again.model.coeffs() == cw.model.coeffs());
}

TEST_CASE("budget and resolution cap") {
    const auto train = d1_train();
    const auto w = MotherWavelet::sinc(2);
    auto cfg = d1_config(0.006, 1.0 / 3.0);
    cfg.max_iters = 30;
    const auto r = run_growth(train, w, cfg);
    CHECK(r.status == TrainStatus::Budget);
    CHECK(r.iterations == 30);
    CHECK(r.stop_reason == "iteration budget exhausted");

    cfg = d1_config(1e-5, 1.0);
    cfg.max_resolution = 2;
    const auto capped = run_growth(train, w, cfg);
    CHECK(capped.status == TrainStatus::Budget);
    CHECK(capped.stop_reason == "resolution cap reached");
    CHECK(capped.final_resolution == 2);
}

TEST_CASE("online: constant stream and boundaries") {
    const auto w = MotherWavelet::sinc(2);
    GrowthConfig cfg = d1_config(0.02, 1.0 / 3.0);
    cfg.learning_rate = 1e-4;
    Dataset zero;
    zero.x = RowMatrix::Constant(200, 2, 0.5);
    zero.y = Eigen::VectorXd::Zero(200);
    const auto r = run_online(zero, w, cfg, OnlineConfig{});
    CHECK(r.trace.size() == 20);
    CHECK(r.trace.back().loss == 0.0);
    CHECK(r.log.events.size() == 1);
    CHECK(r.total_steps == 0);

    OnlineConfig one;
    one.window = 1;
    one.memory_windows = 5;
    one.steps_per_window = 3;
    const auto s = gen_autoregression(30, 1);
    const auto r1 = run_online(s, w, cfg, one);
    CHECK(r1.trace.size() == s.size());

    OnlineConfig wide;
    wide.window = 100;
    const auto r2 = run_online(s, w, cfg, wide);
    CHECK(r2.trace.size() == 1);

    OnlineConfig bad;
    bad.window = 0;
    CHECK_THROWS_AS(run_online(s, w, cfg, bad), ContractError);
}

TEST_CASE("online: stream without a switch needs no growth") {
    const auto s = gen_autoregression(3000, 1);
    auto cfg = d1_config(0.02, 1.0 / 3.0);
    cfg.learning_rate = 1e-4;
    const auto r = run_online(s, MotherWavelet::sinc(2), cfg, OnlineConfig{});
    CHECK(r.log.events.size() == 1);
    CHECK(r.trace.back().loss <= 0.02);
    bool res2 = true;
    for (const auto& b : r.model.bases())
        res2 = res2 && b.m == 2;
    CHECK(res2);
}

TEST_CASE("model json round trip") {
    for (auto w : {MotherWavelet::sinc(2), MotherWavelet::mexican_hat(3), MotherWavelet::sinc(1)}) {
        WaveletModel m(w);
        const int d = w.dim();
        m.add(BasisIndex::wavelet(2, std::vector<int>(static_cast<std::size_t>(d), -3)), 0.1 + 1.0 / 3.0);
        m.add(BasisIndex::scaling(1, std::vector<int>(static_cast<std::size_t>(d), 4)), -2.5e-17);
        const auto back = model_from_json(model_to_json(m));
        CHECK(back.mother().family() == w.family());
        CHECK(back.mother().dim() == d);
        CHECK(back.bases() == m.bases());
        CHECK(back.coeffs() == m.coeffs());
        CHECK(back.mother().norm_sq() == w.norm_sq());
    }
    CHECK_THROWS_AS(model_from_json("{\"family\":\"sinc\"}"), ContractError);
    CHECK_THROWS_AS(
        model_from_json("{\"family\":\"mexican_hat\",\"dim\":1,\"bases\":[{\"kind\":\"x\",\"m\":0,\"n\":[0],\"coeff\":1}]}"),
        ContractError);
}
