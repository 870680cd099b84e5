#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "doctest.h"
#include "fixtures.hpp"
#include "sdet/errors.hpp"
#include "sdet/response.hpp"

using namespace sdet;
constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

namespace {

// Composite 20-point Gauss-Legendre on panels no wider than h.
template <class F>
cplx composite(F f, double a, double b, double h) {
    using G = boost::math::quadrature::gauss<double, 20>;
    if (b <= a) return 0.0;
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / h)));
    const double w = (b - a) / panels;
    cplx sum(0.0, 0.0);
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * w;
        for (std::size_t i = 0; i < G::abscissa().size(); ++i) {
            const double x = G::abscissa()[i] * 0.5 * w;
            const double wt = G::weights()[i] * 0.5 * w;
            if (x == 0.0) {
                sum += wt * f(c);
            } else {
                sum += wt * (f(c + x) + f(c - x));
            }
        }
    }
    return sum;
}

cplx full_by_quadrature(double nu, double T, double t0) {
    return composite([&](double t) { return std::exp(kI * nu * t) * std::exp(-std::pow((t - t0) / T, 2)); },
                     t0 - 8.0 * T, t0 + 8.0 * T, 0.1 * T);
}

cplx nested_by_quadrature(double nu, double mu, double T, double Tp, double t0, double t0p) {
    const auto eta = [](double t, double c, double w) { return std::exp(-std::pow((t - c) / w, 2)); };
    return composite(
        [&](double tp) {
            const cplx inner = composite([&](double t) { return std::exp(kI * nu * t) * eta(t, t0, T); },
                                         t0 - 8.0 * T, std::min(tp, t0 + 8.0 * T), 0.1 * T);
            return std::exp(kI * mu * tp) * eta(tp, t0p, Tp) * inner;
        },
        t0p - 8.0 * Tp, t0p + 8.0 * Tp, 0.1 * Tp);
}

DetectorPairSpec pair_at(double ra, double rb, double gamma, FieldState s) {
    DetectorPairSpec pr;
    pr.a = {ra, 2.0, 1.0, 1.0, 0.0};
    pr.b = {rb, 2.0, 1.0, 1.0, 12.0};
    pr.gamma = gamma;
    pr.state = s;
    return pr;
}

ConvergenceControls small_controls() {
    ConvergenceControls c;
    c.ell_cut = 5;
    return c;
}

}  // namespace

TEST_CASE("full window integral") {
    CHECK(window_integral_full(0.0, 1.7, 3.0) == cplx(std::sqrt(kPi) * 1.7, 0.0));
    CHECK(std::abs(window_integral_full(2.0, 1.0, 0.0)) ==
          doctest::Approx(std::abs(window_integral_full(2.0, 1.0, 9.3))).epsilon(1e-15));
    const cplx ref = full_by_quadrature(3.0, 1.0, 2.0);
    CHECK(std::abs(window_integral_full(3.0, 1.0, 2.0) - ref) < 1e-12 * std::abs(ref));
}

TEST_CASE("nested window integral") {
    // The two time orderings add up to the product of full integrals.
    for (auto [nu, mu, T, Tp, t0, t0p] : {std::tuple{1.3, -0.4, 1.0, 1.0, 0.0, 5.0},
                                          std::tuple{2.0, 0.7, 0.5, 2.0, -1.0, 3.0},
                                          std::tuple{-3.0, 4.0, 1.5, 1.0, 2.0, 2.0}}) {
        const cplx a = window_integral_nested(nu, mu, T, Tp, t0, t0p);
        const cplx b = window_integral_nested(mu, nu, Tp, T, t0p, t0);
        const cplx prod = window_integral_full(nu, T, t0) * window_integral_full(mu, Tp, t0p);
        CHECK(std::abs(a + b - prod) < 1e-13 * std::max({std::abs(a), std::abs(b), std::abs(prod)}));
    }
    const cplx half = window_integral_nested(1.1, 1.1, 1.0, 1.0, 0.5, 0.5);
    const cplx full = window_integral_full(1.1, 1.0, 0.5);
    CHECK(std::abs(half - 0.5 * full * full) < 1e-14 * std::abs(full * full));

    const cplx ref = nested_by_quadrature(1.3, -0.4, 1.0, 1.0, 0.0, 5.0);
    const cplx fast = window_integral_nested(1.3, -0.4, 1.0, 1.0, 0.0, 5.0);
    CHECK(std::abs(fast - ref) < 1e-10 * std::abs(ref));

    // Unequal widths shift the erfc argument by the width mismatch.
    const cplx ref_w = nested_by_quadrature(-1.2, 0.9, 1.9, 0.8, 1.0, 3.0);
    const cplx fast_w = window_integral_nested(-1.2, 0.9, 1.9, 0.8, 1.0, 3.0);
    CHECK(std::abs(ref_w) > 0.1);
    CHECK(std::abs(fast_w - ref_w) < 1e-10 * kPi * 1.9 * 0.8);
}

TEST_CASE("negativity formula") {
    CHECK(negativity(1e-6, 1e-6, cplx(3e-6, 0.0)) == doctest::Approx(2e-6).epsilon(1e-12));
    CHECK(negativity(1e-6, 1e-6, cplx(0.0, 5e-7)) == 0.0);
    CHECK(negativity(1e-6, 2e-6, 0.0) == 0.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1e-4);
    for (int i = 0; i < 200; ++i) {
        const double a = u(rng), b = u(rng);
        const cplx m(u(rng), u(rng));
        const double n = negativity(a, b, m);
        CHECK(n >= 0.0);
        CHECK((n > 0.0) == (std::norm(m) > a * b * (1.0 + 1e-9)));
    }
}

TEST_CASE("density matrix structure") {
    PairResponse r;
    r.L_aa = 2e-6;
    r.L_bb = 3e-6;
    r.L_ab = cplx(1e-6, -4e-7);
    r.M = cplx(-5e-7, 2e-7);
    const Eigen::Matrix4cd rho = density_matrix(r, 1.0, 1.0);
    CHECK(std::abs(rho.trace() - 1.0) == 0.0);
    CHECK((rho - rho.adjoint()).norm() == 0.0);
    CHECK(rho(1, 2) == r.L_ab);
    CHECK(rho(3, 0) == r.M);
    const Eigen::Matrix4cd scaled = density_matrix(r, 2.0, 0.5);
    CHECK(scaled(1, 1).real() == doctest::Approx(4.0 * r.L_aa));
    CHECK(scaled(2, 2).real() == doctest::Approx(0.25 * r.L_bb));
    CHECK(std::abs(scaled.trace() - 1.0) < 1e-18);
    const Eigen::Matrix4cd vac = density_matrix(PairResponse{}, 1.0, 1.0);
    Eigen::Matrix4cd gg = Eigen::Matrix4cd::Zero();
    gg(0, 0) = 1.0;
    CHECK(vac == gg);
}

TEST_CASE("proper width helper") {
    const SpacetimeParams p;
    CHECK(proper_width(p, 4.0, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("local noise terms are real and non-negative") {
    const ModeTable& t = testing::small_table();
    const SpacetimeParams p;
    for (FieldState s : {FieldState::boulware, FieldState::unruh, FieldState::hartle_hawking}) {
        const DetectorPairSpec pr = pair_at(6.009, 8.0, 1.0, s);
        for (Which w : {Which::a, Which::b}) {
            const TermResult l = L_term(p, pr, w, w, t, small_controls());
            CHECK(l.value.real() > 0.0);
            CHECK(std::abs(l.value.imag()) <= 1e-10 * l.value.real());
        }
    }
}

TEST_CASE("cross noise term at coincidence equals the local term") {
    const ModeTable& t = testing::small_table();
    const SpacetimeParams p;
    DetectorPairSpec pr = pair_at(6.009, 6.009, 0.0, FieldState::unruh);
    pr.b.center = pr.a.center;
    const cplx laa = L_term(p, pr, Which::a, Which::a, t, small_controls()).value;
    const cplx lab = L_term(p, pr, Which::a, Which::b, t, small_controls()).value;
    CHECK(std::abs(lab - laa) <= 1e-14 * std::abs(laa));
}

TEST_CASE("M recombines from its split and the commutator part is state independent") {
    const ModeTable& t = testing::small_table();
    const SpacetimeParams p;
    cplx minus[3];
    int i = 0;
    for (FieldState s : {FieldState::boulware, FieldState::unruh, FieldState::hartle_hawking}) {
        const DetectorPairSpec pr = pair_at(6.009, 8.0, 2.0, s);
        const PairResponse r = evaluate_pair(p, pr, t, small_controls());
        CHECK(r.recombination_error < 1e-12);
        minus[i++] = r.M_minus;
    }
    CHECK(std::abs(minus[1] - minus[0]) < 1e-6 * std::abs(minus[0]));
    CHECK(std::abs(minus[2] - minus[0]) < 1e-6 * std::abs(minus[0]));
}

TEST_CASE("swapping detector labels") {
    const ModeTable& t = testing::small_table();
    const SpacetimeParams p;
    DetectorPairSpec pr = pair_at(6.009, 6.009, 1.2, FieldState::hartle_hawking);
    DetectorPairSpec sw = pr;
    std::swap(sw.a, sw.b);
    const PairResponse a = evaluate_pair(p, pr, t, small_controls());
    const PairResponse b = evaluate_pair(p, sw, t, small_controls());
    CHECK(std::abs(b.L_ab - std::conj(a.L_ab)) <= 1e-10 * std::abs(a.L_ab));
    CHECK(std::abs(std::abs(b.M) - std::abs(a.M)) <= 1e-10 * std::abs(a.M));
}

TEST_CASE("summation modes agree") {
    const ModeTable& t = testing::small_table();
    const SpacetimeParams p;
    const DetectorPairSpec pr = pair_at(6.009, 8.0, 0.7, FieldState::unruh);
    ConvergenceControls kahan = small_controls();
    kahan.pairwise = false;
    const cplx a = M_term(p, pr, t, small_controls()).value;
    const cplx b = M_term(p, pr, t, kahan).value;
    CHECK(std::abs(a - b) < 1e-13 * std::abs(a));
}

TEST_CASE("response input validation") {
    const ModeTable& t = testing::small_table();
    const SpacetimeParams p;
    DetectorPairSpec pr = pair_at(6.009, 8.0, 0.7, FieldState::boulware);
    ConvergenceControls c = small_controls();
    c.ell_cut = 6;
    CHECK_THROWS_AS(M_term(p, pr, t, c), CoverageError);
    pr.b.r = 9.0;
    CHECK_THROWS_AS(M_term(p, pr, t, small_controls()), CoverageError);
    pr.b.r = 8.0;
    pr.b.width = 0.0;
    CHECK_THROWS_AS(M_term(p, pr, t, small_controls()), DomainError);
    pr.b.width = 1.0;
    pr.gamma = 4.0;
    CHECK_THROWS_AS(M_term(p, pr, t, small_controls()), DomainError);
}
