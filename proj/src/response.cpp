#include "sdet/response.hpp"

#include <cmath>
#include <numbers>

#include "sdet/errors.hpp"
#include "sdet/specfun.hpp"

namespace sdet {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

const DetectorSpec& pick(const DetectorPairSpec& pair, Which w) { return w == Which::a ? pair.a : pair.b; }

void check_table(const SpacetimeParams& p, const ModeTable& t, const ConvergenceControls& c) {
    if (std::abs(p.mass - t.mass) > 1e-14 * p.mass) throw DomainError("mode table was built for a different mass");
    if (c.ell_cut < 0) throw DomainError("ell_cut must be non-negative");
    if (c.ell_cut > t.grid.ell_max) {
        throw CoverageError("ell_cut " + std::to_string(c.ell_cut) + " exceeds the table's l_max " +
                            std::to_string(t.grid.ell_max));
    }
    if (t.coeffs.empty()) throw CoverageError("mode table holds no modes");
}

cplx sum_of(const std::vector<cplx>& v, bool pairwise) {
    return pairwise ? pairwise_sum(v.data(), v.size()) : kahan_sum(v.data(), v.size());
}

double trapezoid_weight(std::size_t k, std::size_t n, double h) {
    if (n == 1) return 0.0;
    return (k == 0 || k + 1 == n) ? 0.5 * h : h;
}

cplx part_of(KernelPart part, cplx h, cplx h_mirror) {
    switch (part) {
        case KernelPart::full: return h;
        case KernelPart::symmetric: return 0.5 * (h + std::conj(h_mirror));
        case KernelPart::antisymmetric: return (h - std::conj(h_mirror)) / (2.0 * kI);
    }
    return h;
}

// Integrates sum_s H_s(l, k) X_s(k) over the grid for every l <= ell_cut.
// Each weight source supplies (j, jp) and the window factors at +omega and -omega.
struct WeightedWindow {
    std::size_t j, jp;
    std::vector<cplx> pos, neg;
};

EllSeries integrate(const DetectorPairSpec& pair, const ModeTable& t, const ConvergenceControls& c,
                    const std::vector<WeightedWindow>& parts, KernelPart part, cplx prefactor) {
    const std::size_t n = t.n_omega();
    const double h = t.grid.omega_step / t.mass;
    EllSeries s;
    s.omega_min = t.grid.omega_min / t.mass;
    s.omega_max = t.grid.omega_at(n - 1) / t.mass;
    std::vector<cplx> integrand(n);
    for (int ell = 0; ell <= c.ell_cut; ++ell) {
        for (std::size_t k = 0; k < n; ++k) {
            cplx acc(0.0, 0.0);
            for (const auto& w : parts) {
                const WeightPair wp = kernel_weights(pair.state, t, ell, k, w.j, w.jp, c.ordering);
                acc += part_of(part, wp.pos, wp.neg) * w.pos[k] + part_of(part, wp.neg, wp.pos) * w.neg[k];
            }
            integrand[k] = acc;
        }
        s.first_omega.push_back(std::abs(prefactor * integrand.front()));
        s.last_omega.push_back(std::abs(prefactor * integrand.back()));
        for (std::size_t k = 0; k < n; ++k) integrand[k] *= trapezoid_weight(k, n, h);
        s.terms.push_back(prefactor * sum_of(integrand, c.pairwise));
    }
    return s;
}

}  // namespace

double DetectorSpec::lapse_root(const SpacetimeParams& p) const { return redshift_factor(p, r); }

void DetectorSpec::validate(const SpacetimeParams& p) const {
    if (!(r > p.horizon_radius())) throw DomainError("detector radius must exceed 2M");
    if (!(width > 0.0)) throw DomainError("switching width must be positive");
    if (!(gap > 0.0)) throw DomainError("energy gap must be positive");
    if (!std::isfinite(center) || !std::isfinite(coupling)) throw DomainError("non-finite detector parameter");
}

double proper_width(const SpacetimeParams& p, double r, double t_inf) { return t_inf / redshift_factor(p, r); }

void Diagnostics::merge(const Diagnostics& o, const std::string& label) {
    last_ell_relative = std::max(last_ell_relative, o.last_ell_relative);
    last_omega_relative = std::max(last_omega_relative, o.last_omega_relative);
    sliver_bound = std::max(sliver_bound, o.sliver_bound);
    tail_warning = tail_warning || o.tail_warning;
    for (const std::string& w : o.warnings) warnings.push_back(label.empty() ? w : label + ": " + w);
}

cplx window_integral_full(double nu, double T, double t0) {
    return std::sqrt(kPi) * T * std::exp(-nu * nu * T * T / 4.0) * std::exp(kI * (nu * t0));
}

cplx window_integral_nested(double nu, double mu, double T_d, double T_dp, double t0_d, double t0_dp) {
    // Inner integral over d up to t', then the Gaussian average of erfc over d'.
    // For T_d = T_dp the argument equals i times the erfi argument of the
    // equal-width form. The Gaussian prefactor is folded into the exponent.
    const cplx z = (0.5 * kI * (nu * T_d * T_d - mu * T_dp * T_dp) - (t0_dp - t0_d)) / std::hypot(T_d, T_dp);
    const cplx log_pref = -(mu * mu * T_dp * T_dp + nu * nu * T_d * T_d) / 4.0 + kI * (nu * t0_d + mu * t0_dp);
    return 0.5 * kPi * T_d * T_dp * scaled_erfc(z, log_pref);
}

EllSeries L_series(const SpacetimeParams& p, const DetectorPairSpec& pair, Which d, Which dp, const ModeTable& t,
                   const ConvergenceControls& c) {
    check_table(p, t, c);
    const DetectorSpec& A = pick(pair, d);
    const DetectorSpec& B = pick(pair, dp);
    A.validate(p);
    B.validate(p);
    const double na = A.lapse_root(p), nb = B.lapse_root(p);
    const double ea = A.gap * na, eb = B.gap * nb;
    const std::size_t n = t.n_omega();
    WeightedWindow w{radius_index(t, A.r), radius_index(t, B.r), std::vector<cplx>(n), std::vector<cplx>(n)};
    const auto factor = [&](double om) {
        const double x = ea + om, y = eb + om;
        return std::exp(kI * (y * B.center - x * A.center) - x * x * A.width * A.width / 4.0 -
                        y * y * B.width * B.width / 4.0);
    };
    for (std::size_t k = 0; k < n; ++k) {
        const double om = t.grid.omega_at(k) / t.mass;
        w.pos[k] = factor(om);
        w.neg[k] = factor(-om);
    }
    const double pref = A.coupling * B.coupling * na * nb * A.width * B.width / (16.0 * kPi);
    return integrate(pair, t, c, {w}, KernelPart::full, pref);
}

EllSeries M_series(const SpacetimeParams& p, const DetectorPairSpec& pair, const ModeTable& t,
                   const ConvergenceControls& c, KernelPart part) {
    check_table(p, t, c);
    const DetectorSpec& A = pair.a;
    const DetectorSpec& B = pair.b;
    A.validate(p);
    B.validate(p);
    const double na = A.lapse_root(p), nb = B.lapse_root(p);
    const double ea = A.gap * na, eb = B.gap * nb;
    const std::size_t n = t.n_omega();
    const std::size_t ja = radius_index(t, A.r), jb = radius_index(t, B.r);
    // First ordering: outer integral over A with mu_A, inner over B with nu_B, kernel G(r_A, r_B).
    WeightedWindow ab{ja, jb, std::vector<cplx>(n), std::vector<cplx>(n)};
    WeightedWindow ba{jb, ja, std::vector<cplx>(n), std::vector<cplx>(n)};
    for (std::size_t k = 0; k < n; ++k) {
        const double om = t.grid.omega_at(k) / t.mass;
        for (int sgn : {1, -1}) {
            const double o = sgn * om;
            const cplx x_ab = window_integral_nested(o + eb, ea - o, B.width, A.width, B.center, A.center);
            const cplx x_ba = window_integral_nested(o + ea, eb - o, A.width, B.width, A.center, B.center);
            (sgn > 0 ? ab.pos : ab.neg)[k] = x_ab;
            (sgn > 0 ? ba.pos : ba.neg)[k] = x_ba;
        }
    }
    const double pref = -A.coupling * B.coupling * na * nb / (16.0 * kPi * kPi);
    return integrate(pair, t, c, {ab, ba}, part, pref);
}

cplx resum(const EllSeries& s, double gamma, const ConvergenceControls& c, Diagnostics* diag) {
    if (!(gamma >= 0.0 && gamma <= kPi)) throw DomainError("gamma must lie in [0, pi]");
    const int lc = std::min<int>(c.ell_cut, static_cast<int>(s.terms.size()) - 1);
    if (lc < 0) return 0.0;
    const std::vector<double> P = legendre_p_all(lc, std::cos(gamma));
    std::vector<cplx> v(static_cast<std::size_t>(lc) + 1);
    double tail_omega = 0.0, sliver = 0.0;
    for (int l = 0; l <= lc; ++l) {
        const double g = (2.0 * l + 1.0) * P[l];
        v[l] = g * s.terms[l];
        tail_omega += std::abs(g) * s.last_omega[l] * s.omega_max;
        sliver += std::abs(g) * s.first_omega[l] * s.omega_min;
    }
    const cplx total = sum_of(v, c.pairwise);
    if (diag) {
        const double mag = std::abs(total);
        diag->last_ell_relative = mag > 0.0 ? std::abs(v.back()) / mag : 0.0;
        diag->last_omega_relative = mag > 0.0 ? tail_omega / mag : 0.0;
        diag->sliver_bound = sliver;
        if (diag->last_ell_relative > c.tail_threshold) {
            diag->tail_warning = true;
            diag->warnings.push_back("last l summand is " + std::to_string(diag->last_ell_relative) +
                                     " of the accumulated sum");
        }
    }
    return total;
}

TermResult L_term(const SpacetimeParams& p, const DetectorPairSpec& pair, Which d, Which dp, const ModeTable& t,
                  const ConvergenceControls& c) {
    TermResult r;
    const double gamma = d == dp ? 0.0 : pair.gamma;
    r.value = resum(L_series(p, pair, d, dp, t, c), gamma, c, &r.diag);
    return r;
}

TermResult M_term(const SpacetimeParams& p, const DetectorPairSpec& pair, const ModeTable& t,
                  const ConvergenceControls& c) {
    TermResult r;
    r.value = resum(M_series(p, pair, t, c), pair.gamma, c, &r.diag);
    return r;
}

MSplit M_split(const SpacetimeParams& p, const DetectorPairSpec& pair, const ModeTable& t,
               const ConvergenceControls& c) {
    MSplit r;
    Diagnostics d2;
    Diagnostics d1;
    r.plus = resum(M_series(p, pair, t, c, KernelPart::symmetric), pair.gamma, c, &d1);
    r.minus = resum(M_series(p, pair, t, c, KernelPart::antisymmetric), pair.gamma, c, &d2);
    r.diag.merge(d1, "M+");
    r.diag.merge(d2, "M-");
    return r;
}

double negativity(double L_aa, double L_bb, cplx M) {
    const double d = L_aa - L_bb;
    const double n = 0.5 * (std::sqrt(d * d + 4.0 * std::norm(M)) - L_aa - L_bb);
    return n <= 1e-14 ? 0.0 : n;
}

PairResponse evaluate_pair(const SpacetimeParams& p, const DetectorPairSpec& pair, const ModeTable& t,
                           const ConvergenceControls& c) {
    PairResponse r;
    r.lambda_a = pair.a.coupling;
    r.lambda_b = pair.b.coupling;
    const TermResult laa = L_term(p, pair, Which::a, Which::a, t, c);
    const TermResult lbb = L_term(p, pair, Which::b, Which::b, t, c);
    const TermResult lab = L_term(p, pair, Which::a, Which::b, t, c);
    const TermResult m = M_term(p, pair, t, c);
    const MSplit split = M_split(p, pair, t, c);
    r.L_aa = laa.value.real();
    r.L_bb = lbb.value.real();
    r.L_ab = lab.value;
    r.M = m.value;
    r.M_plus = split.plus;
    r.M_minus = split.minus;
    r.N2 = negativity(std::max(r.L_aa, 0.0), std::max(r.L_bb, 0.0), r.M);
    const double mag = std::abs(r.M);
    r.recombination_error = mag > 0.0 ? std::abs(r.M - (r.M_plus + kI * r.M_minus)) / mag : 0.0;
    r.diag.merge(laa.diag, "L_aa");
    r.diag.merge(lbb.diag, "L_bb");
    r.diag.merge(lab.diag, "L_ab");
    r.diag.merge(m.diag, "M");
    r.diag.merge(split.diag);
    for (const TermResult* x : {&laa, &lbb}) {
        if (std::abs(x->value.imag()) > 1e-10 * std::abs(x->value.real())) {
            r.diag.warnings.push_back("local noise term has a non-negligible imaginary part");
        }
        if (x->value.real() < -1e-12) r.diag.warnings.push_back("local noise term is negative");
    }
    return r;
}

Eigen::Matrix4cd density_matrix(const PairResponse& r, double lambda_a, double lambda_b) {
    const double sa = r.lambda_a != 0.0 ? lambda_a / r.lambda_a : 0.0;
    const double sb = r.lambda_b != 0.0 ? lambda_b / r.lambda_b : 0.0;
    const double laa = r.L_aa * sa * sa;
    const double lbb = r.L_bb * sb * sb;
    const cplx lab = r.L_ab * sa * sb;
    const cplx m = r.M * sa * sb;
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
    rho(0, 0) = 1.0 - laa - lbb;
    rho(0, 3) = std::conj(m);
    rho(1, 1) = laa;
    rho(1, 2) = lab;
    rho(2, 1) = std::conj(lab);
    rho(2, 2) = lbb;
    rho(3, 0) = m;
    return rho;
}

cplx pairwise_sum(const cplx* v, std::size_t n) {
    if (n <= 8) {
        cplx s(0.0, 0.0);
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

cplx kahan_sum(const cplx* v, std::size_t n) {
    cplx s(0.0, 0.0), comp(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const cplx y = v[i] - comp;
        const cplx t = s + y;
        comp = (t - s) - y;
        s = t;
    }
    return s;
}

}  // namespace sdet
