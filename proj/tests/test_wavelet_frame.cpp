#include "doctest.h"

#include "cwnn/error.hpp"
#include "cwnn/quadrature.hpp"
#include "cwnn/rng.hpp"
#include "cwnn/wavelet_frame.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace cwnn;
using std::numbers::pi;

namespace {

std::vector<double> centers_1d(const std::vector<BasisIndex>& bs, std::size_t axis = 0) {
    std::vector<double> out;
    for (const auto& b : bs)
        out.push_back(b.center()[axis]);
    return out;
}

// Closed form of the d = 2 annulus wavelet: (2 J1(2r) - J1(r)) / (2r).
double sinc2d_oracle(double r) {
    if (r == 0.0)
        return 0.75;
    return (2.0 * boost::math::cyl_bessel_j(1, 2.0 * r) - boost::math::cyl_bessel_j(1, r)) / (2.0 * r);
}

}  // namespace

TEST_CASE("mother wavelet point values") {
    const auto mh1 = MotherWavelet::mexican_hat(1);
    const auto mh2 = MotherWavelet::mexican_hat(2);
    const auto s1 = MotherWavelet::sinc(1);
    std::vector<double> zero1{0.0}, ones2{1.0, 1.0};
    CHECK(eval_mother(mh1, zero1) == 1.0);
    CHECK(eval_mother(mh2, ones2) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(eval_mother(s1, zero1) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> tiny{1e-9};
    CHECK(eval_mother(s1, tiny) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> x{0.7};
    const double r = 0.7;
    CHECK(eval_mother(s1, x) ==
          doctest::Approx(std::sin(2 * r) / r - std::sin(r) / r).epsilon(1e-14));
    CHECK(eval_mother(mh1, x) == doctest::Approx((1 - r * r) * std::exp(-r * r / 2)));
}

TEST_CASE("dimension mismatch is a contract error") {
    const auto mh2 = MotherWavelet::mexican_hat(2);
    std::vector<double> x{0.0};
    CHECK_THROWS_AS(eval_mother(mh2, x), ContractError);
    CHECK_THROWS_AS(eval_basis(mh2, BasisIndex::wavelet(0, {0}), x), ContractError);
    std::vector<double> x2{0.0, 0.0};
    CHECK_THROWS_AS(eval_basis(mh2, BasisIndex::scaling(0, {0, 0}), x2), ContractError);
    CHECK_THROWS_AS(eval_scaling(mh2, BasisIndex::wavelet(0, {0, 0}), x2), ContractError);
}

TEST_CASE("dilated and translated bases") {
    const auto mh1 = MotherWavelet::mexican_hat(1);
    const auto mh2 = MotherWavelet::mexican_hat(2);
    std::vector<double> zero{0.0};
    CHECK(eval_basis(mh1, BasisIndex::wavelet(1, {0}), zero) == doctest::Approx(std::sqrt(2.0)));
    std::vector<double> ones{1.0, 1.0};
    CHECK(eval_basis(mh2, BasisIndex::wavelet(1, {2, 2}), ones) == doctest::Approx(4.0));

    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x{rng.uniform(-3, 3)};
        CHECK(eval_basis(mh1, BasisIndex::wavelet(0, {0}), x) == eval_mother(mh1, x));
    }
}

TEST_CASE("scaling companions") {
    const auto mh1 = MotherWavelet::mexican_hat(1);
    const auto s2 = MotherWavelet::sinc(2);
    std::vector<double> zero1{0.0}, zero2{0.0, 0.0}, one{1.0};
    CHECK(eval_scaling(mh1, BasisIndex::scaling(0, {0}), zero1) == 1.0);
    CHECK(eval_scaling(s2, BasisIndex::scaling(0, {0, 0}), zero2) == doctest::Approx(1.0));
    CHECK(eval_scaling(mh1, BasisIndex::scaling(1, {2}), one) == doctest::Approx(std::sqrt(2.0)));
    std::vector<double> p{0.3, -1.1};
    CHECK(eval(s2, BasisIndex::scaling(0, {0, 0}), p) ==
          doctest::Approx(std::sin(0.3) / 0.3 * std::sin(1.1) / 1.1));
}

TEST_CASE("norms against closed forms") {
    CHECK(MotherWavelet::mexican_hat(1).norm_sq() ==
          doctest::Approx(0.75 * std::sqrt(pi)).epsilon(1e-12));
    CHECK(MotherWavelet::mexican_hat(2).norm_sq() == doctest::Approx(2 * pi).epsilon(1e-12));
    CHECK(MotherWavelet::mexican_hat(3).norm_sq() ==
          doctest::Approx(std::pow(pi, 1.5) * 15.0 / 4.0).epsilon(1e-12));
    CHECK(MotherWavelet::sinc(1).norm_sq() == doctest::Approx(pi).epsilon(1e-12));
    CHECK(MotherWavelet::sinc(2).norm_sq() == doctest::Approx(0.75 * pi).epsilon(1e-12));
}

TEST_CASE("radial and tensor quadrature agree for the 2-D Mexican hat") {
    const auto w = MotherWavelet::mexican_hat(2);
    quad::Box box{{-10, -10}, {10, 10}};
    auto f = [&](std::span<const double> x) {
        const double v = w(x);
        return v * v;
    };
    const double coarse = quad::integrate(f, box, 16);
    const double fine = quad::integrate(f, box, 32);
    CHECK(std::abs(coarse - fine) <= 1e-8 * std::abs(fine));
    CHECK(fine == doctest::Approx(w.norm_sq()).epsilon(1e-8));
}

TEST_CASE("dilation keeps the L2 norm") {
    const auto w = MotherWavelet::mexican_hat(1);
    Rng rng(11);
    for (int m = -1; m <= 3; ++m) {
        const int n = static_cast<int>(rng.below(9)) - 4;
        const BasisIndex b = BasisIndex::wavelet(m, {n});
        const double c = b.center()[0];
        const double half = 14.0 * std::ldexp(1.0, -m);
        auto f = [&](double x) {
            std::vector<double> p{x};
            const double v = eval_basis(w, b, p);
            return v * v;
        };
        const double q = quad::integrate_1d(f, c - half, c + half, 64);
        CHECK(q == doctest::Approx(w.norm_sq()).epsilon(1e-6));
    }
}

TEST_CASE("2-D sinc profile matches the Bessel closed form") {
    const auto w = MotherWavelet::sinc(2);
    REQUIRE(w.profile() != nullptr);
    CHECK(w.radial(0.0) == doctest::Approx(0.75).epsilon(1e-12));
    double worst = 0.0;
    for (double r = 0.0; r < 60.0; r += 0.01237)
        worst = std::max(worst, std::abs(w.radial(r) - sinc2d_oracle(r)));
    CHECK(worst < 1e-6);
    CHECK(w.radial(1000.0) == 0.0);
    CHECK(MotherWavelet::sinc(1).profile() == nullptr);
    CHECK(MotherWavelet::mexican_hat(2).profile() == nullptr);
}

TEST_CASE("radial symmetry under random rotations") {
    const auto mh = MotherWavelet::mexican_hat(2);
    const auto s2 = MotherWavelet::sinc(2);
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x{rng.uniform(-4, 4), rng.uniform(-4, 4)};
        const double th = rng.uniform(0, 2 * pi);
        std::vector<double> rx{std::cos(th) * x[0] - std::sin(th) * x[1],
                               std::sin(th) * x[0] + std::cos(th) * x[1]};
        CHECK(std::abs(mh(rx) - mh(x)) < 1e-9);
        CHECK(std::abs(s2(rx) - s2(x)) < 1e-6);
    }
}

TEST_CASE("sinc bands two octaves apart are nearly orthogonal") {
    const auto w = MotherWavelet::sinc(1);
    const BasisIndex a = BasisIndex::wavelet(0, {0});
    const BasisIndex b = BasisIndex::wavelet(2, {1});
    auto f = [&](double x) {
        std::vector<double> p{x};
        return eval_basis(w, a, p) * eval_basis(w, b, p);
    };
    const double ip = quad::integrate_1d(f, -400.0, 400.0, 4000);
    CHECK(std::abs(ip) < 1e-3 * w.norm_sq());
    auto g = [&](double x) {
        std::vector<double> p{x};
        const double v = eval_basis(w, b, p);
        return v * v;
    };
    CHECK(quad::integrate_1d(g, -400.0, 400.0, 4000) == doctest::Approx(pi).epsilon(1e-2));
}

TEST_CASE("basis index identity") {
    const auto a = BasisIndex::wavelet(1, {2, 3});
    CHECK(a.center() == std::vector<double>{1.0, 1.5});
    CHECK(a.frequency() == 2.0);
    CHECK(a == BasisIndex::wavelet(1, {2, 3}));
    CHECK(a != BasisIndex::scaling(1, {2, 3}));
    CHECK(BasisIndexHash{}(a) == BasisIndexHash{}(BasisIndex::wavelet(1, {2, 3})));
    CHECK(BasisIndex::wavelet(-2, {1}).center()[0] == 4.0);
}

TEST_CASE("center grids") {
    std::vector<double> lo2{0, 0}, hi2{1, 1};
    auto g = build_center_grid(1, lo2, hi2, 1.0, std::vector<double>{0, 0});
    CHECK(g.size() == 25);
    CHECK(g.axes[0] == std::vector<int>{0, 1, 2, 3, 4});
    for (const auto& b : g.bases) {
        auto c = b.center();
        CHECK(c[0] >= 0.0);
        CHECK(c[1] <= 2.0);
    }
    CHECK(g.bases.front().n == std::vector<int>{0, 0});
    CHECK(g.bases[1].n == std::vector<int>{0, 1});

    auto unclamped = build_center_grid(1, lo2, hi2, 1.0);
    CHECK(unclamped.size() == 49);

    std::vector<double> lo{0}, hi{1};
    CHECK(centers_1d(build_center_grid(0, lo, hi, 0.0).bases) == std::vector<double>{0, 1});
    auto g2 = build_center_grid(2, lo, hi, 0.0);
    CHECK(centers_1d(g2.bases) == std::vector<double>{0, 0.25, 0.5, 0.75, 1});

    std::vector<double> a{0.1}, b{0.2};
    CHECK_THROWS_AS(build_center_grid(0, a, b, 0.0), ContractError);
    CHECK_THROWS_AS(build_center_grid(0, b, a, 0.0), ContractError);
}

TEST_CASE("nearest_two") {
    std::vector<double> c1{0, 0.25, 0.5};
    CHECK(nearest_two(0.3, c1) == std::pair{0.25, 0.5});
    std::vector<double> c2{0, 1};
    CHECK(nearest_two(0.0, c2) == std::pair{0.0, 1.0});
    std::vector<double> c3{0, 0.5, 1};
    CHECK(nearest_two(0.5, c3) == std::pair{0.5, 0.0});
    std::vector<double> one{1};
    CHECK_THROWS_AS(nearest_two(0.0, one), ContractError);

    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> c;
        for (int i = 0; i < 6; ++i)
            c.push_back(std::round(rng.uniform(-4, 4) * 4) / 4);
        const double x = std::round(rng.uniform(-4, 4) * 8) / 8;
        auto base = nearest_two(x, c);
        // brute force with the low tie rule
        auto sorted = c;
        std::stable_sort(sorted.begin(), sorted.end(), [&](double p, double q) {
            const double dp = std::abs(p - x), dq = std::abs(q - x);
            return dp != dq ? dp < dq : p < q;
        });
        CHECK(base == std::pair{sorted[0], sorted[1]});
        std::reverse(c.begin(), c.end());
        CHECK(nearest_two(x, c) == base);
    }
}

TEST_CASE("random tie-break draws both equidistant values") {
    std::vector<double> c{0, 0.5, 1};
    Rng rng(9);
    int low = 0;
    for (int i = 0; i < 200; ++i) {
        auto [a, b] = nearest_two(0.5, c, TieBreak::Random, &rng);
        CHECK(a == 0.5);
        low += b == 0.0;
    }
    CHECK(low > 50);
    CHECK(low < 150);
    CHECK_THROWS_AS(nearest_two(0.5, c, TieBreak::Random, nullptr), ContractError);
}

TEST_CASE("children centers") {
    auto unbounded = GridBounds::unbounded(1);
    auto kids = children_centers(BasisIndex::wavelet(1, {2}), 2, unbounded);
    CHECK(centers_1d(kids) == std::vector<double>{0.75, 1.0});

    auto clamped = make_bounds(std::vector<double>{0, 0}, std::vector<double>{1, 1}, 1.0,
                               std::vector<double>{0, 0});
    auto k2 = children_centers(BasisIndex::wavelet(1, {0, 0}), 2, clamped);
    REQUIRE(k2.size() == 4);
    CHECK(k2[0].n == std::vector<int>{0, 0});
    CHECK(k2[3].n == std::vector<int>{1, 1});

    auto k3 = children_centers(BasisIndex::wavelet(1, {1}), 2, unbounded);
    CHECK(centers_1d(k3) == std::vector<double>{0.25, 0.5});

    CHECK_THROWS_AS(children_centers(BasisIndex::wavelet(1, {1}), 3, unbounded), ContractError);

    GridBounds tight{{1.0}, {1.0}};
    CHECK(children_centers(BasisIndex::wavelet(1, {2}), 2, tight).size() == 1);
    GridBounds away{{5.0}, {6.0}};
    CHECK(children_centers(BasisIndex::wavelet(1, {2}), 2, away).empty());
}
