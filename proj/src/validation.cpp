#include "sdet/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <Eigen/Eigenvalues>

#include "sdet/errors.hpp"

namespace sdet {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);
using Gauss = boost::math::quadrature::gauss<double, 20>;

// Integral of f over [a, b] split into panels no wider than h.
template <class F>
cplx composite(const F& f, double a, double b, double h) {
    if (!(b > a)) return 0.0;
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / h)));
    const double w = (b - a) / panels;
    cplx sum(0.0, 0.0);
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * w;
        for (std::size_t i = 0; i < Gauss::abscissa().size(); ++i) {
            const double x = Gauss::abscissa()[i] * 0.5 * w;
            const double wt = Gauss::weights()[i] * 0.5 * w;
            sum += x == 0.0 ? wt * f(c) : wt * (f(c + x) + f(c - x));
        }
    }
    return sum;
}

// Nodes and weights of the composite rule, ascending in t.
void composite_nodes(double a, double b, double h, std::vector<double>& t, std::vector<double>& wt) {
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / h)));
    const double w = (b - a) / panels;
    const auto& xs = Gauss::abscissa();
    const auto& ws = Gauss::weights();
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * w;
        for (std::size_t i = xs.size(); i-- > 0;) {
            if (xs[i] == 0.0) continue;
            t.push_back(c - xs[i] * 0.5 * w);
            wt.push_back(ws[i] * 0.5 * w);
        }
        if (xs[0] == 0.0) {
            t.push_back(c);
            wt.push_back(ws[0] * 0.5 * w);
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] == 0.0) continue;
            t.push_back(c + xs[i] * 0.5 * w);
            wt.push_back(ws[i] * 0.5 * w);
        }
    }
}

double gaussian(double t, double c, double w) {
    const double x = (t - c) / w;
    return std::exp(-x * x);
}

OracleReport make_report(std::string name, std::string sample, cplx ref, cplx fast, double err, double tol) {
    return {std::move(name), std::move(sample), ref, fast, err, tol, err <= tol};
}

std::string describe(const WindowSample& s) {
    std::ostringstream os;
    os.precision(6);
    os << "nu=" << s.nu << " T=" << s.T << " t0=" << s.t0;
    if (s.nested) os << " mu=" << s.mu << " Tp=" << s.Tp << " t0p=" << s.t0p;
    return os.str();
}

std::string describe(ModeIndex m) {
    std::ostringstream os;
    os << "l=" << m.ell << " omega=" << m.omega;
    return os.str();
}

}  // namespace

bool all_passed(const std::vector<OracleReport>& reports) {
    return std::all_of(reports.begin(), reports.end(), [](const OracleReport& r) { return r.passed; });
}

std::string format_report(const OracleReport& r) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << r.name << ' ' << (r.passed ? "PASS" : "FAIL") << " err=" << r.rel_error
       << " tol=" << r.tolerance << " [" << r.sample << ']';
    return os.str();
}

std::vector<WindowSample> window_samples(std::size_t n, std::uint64_t seed) {
    std::vector<WindowSample> out;
    if (n == 0) return out;
    out.push_back({0.0, 0.0, 1.0, 1.0, 0.0, 0.0, true});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), width(0.5, 2.0), offset(-10.0, 10.0);
    for (std::size_t i = 1; i < n; ++i) {
        WindowSample s;
        s.T = width(rng);
        s.Tp = (i % 4 == 0) ? 10.0 * s.T : width(rng);
        if (i % 8 == 0) std::swap(s.T, s.Tp);
        s.nu = 20.0 * unit(rng) / s.T;
        s.mu = 20.0 * unit(rng) / s.Tp;
        s.t0 = offset(rng);
        s.t0p = s.t0 + offset(rng);
        s.nested = (i % 5 != 0);
        out.push_back(s);
    }
    return out;
}

cplx window_full_quadrature(double nu, double T, double t0) {
    return composite([&](double t) { return std::exp(kI * (nu * t)) * gaussian(t, t0, T); }, t0 - 8.0 * T,
                     t0 + 8.0 * T, 0.1 * T);
}

cplx window_nested_quadrature(double nu, double mu, double T, double Tp, double t0, double t0p) {
    const double h = 0.1 * std::min(T, Tp);
    const double a = t0 - 8.0 * T, b = t0 + 8.0 * T;
    std::vector<double> nodes, weights;
    composite_nodes(t0p - 8.0 * Tp, t0p + 8.0 * Tp, h, nodes, weights);
    const auto inner = [&](double t) { return std::exp(kI * (nu * t)) * gaussian(t, t0, T); };
    // Inner integral from a up to each outer node, accumulated in ascending order.
    cplx acc(0.0, 0.0), total(0.0, 0.0);
    double reached = a;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double target = std::min(nodes[i], b);
        if (target > reached) {
            acc += composite(inner, reached, target, h);
            reached = target;
        }
        const double tp = nodes[i];
        total += weights[i] * std::exp(kI * (mu * tp)) * gaussian(tp, t0p, Tp) * acc;
    }
    return total;
}

std::vector<OracleReport> oracle_window_integrals(const std::vector<WindowSample>& samples, double tol) {
    std::vector<OracleReport> out;
    for (const WindowSample& s : samples) {
        if (s.nested) {
            const cplx ref = window_nested_quadrature(s.nu, s.mu, s.T, s.Tp, s.t0, s.t0p);
            const cplx fast = window_integral_nested(s.nu, s.mu, s.T, s.Tp, s.t0, s.t0p);
            const double scale = std::max(std::abs(ref), kPi * s.T * s.Tp);
            out.push_back(make_report("window_nested", describe(s), ref, fast, std::abs(fast - ref) / scale, tol));
        } else {
            const cplx ref = window_full_quadrature(s.nu, s.T, s.t0);
            const cplx fast = window_integral_full(s.nu, s.T, s.t0);
            const double scale = std::max(std::abs(ref), std::sqrt(kPi) * s.T);
            out.push_back(make_report("window_full", describe(s), ref, fast, std::abs(fast - ref) / scale, tol));
        }
    }
    return out;
}

std::vector<NegativitySample> negativity_samples(std::size_t n, std::uint64_t seed, double max_entry) {
    std::vector<NegativitySample> out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(0.0, max_entry), phase(-kPi, kPi);
    const auto c = [&] { return std::polar(mag(rng), phase(rng)); };
    for (std::size_t i = 0; i < n; ++i) {
        NegativitySample s{mag(rng), mag(rng), c(), c()};
        if (i == 0) s.M = 0.0;
        if (i == 1) s.L_bb = s.L_aa;
        // A third of the samples straddle the entanglement threshold |M|^2 = L_aa L_bb.
        if (i >= 2 && i % 3 == 0) s.M = std::polar(std::sqrt(s.L_aa * s.L_bb) * (0.9 + 0.2 * mag(rng) / max_entry),
                                                   phase(rng));
        out.push_back(s);
    }
    return out;
}

double partial_transpose_negativity(const NegativitySample& s) {
    PairResponse r;
    r.L_aa = s.L_aa;
    r.L_bb = s.L_bb;
    r.L_ab = s.L_ab;
    r.M = s.M;
    const Eigen::Matrix4cd rho = density_matrix(r, 1.0, 1.0);
    // Basis index a + 2b with a, b the detector levels; transpose on B.
    Eigen::Matrix4cd pt;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int ap = 0; ap < 2; ++ap)
                for (int bp = 0; bp < 2; ++bp) pt(a + 2 * b, ap + 2 * bp) = rho(a + 2 * bp, ap + 2 * b);
    // The gg row and column couple in only at second order in the entries.
    const Eigen::Matrix3cd sub = pt.bottomRightCorner<3, 3>();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(sub, Eigen::EigenvaluesOnly);
    double neg = 0.0;
    for (int i = 0; i < 3; ++i) neg += std::max(0.0, -es.eigenvalues()(i));
    return neg;
}

std::vector<OracleReport> oracle_partial_transpose(const std::vector<NegativitySample>& samples, double tol) {
    std::vector<OracleReport> out;
    for (const NegativitySample& s : samples) {
        const double ref = partial_transpose_negativity(s);
        const double fast = negativity(s.L_aa, s.L_bb, s.M);
        std::ostringstream os;
        os.precision(4);
        os << "L_aa=" << s.L_aa << " L_bb=" << s.L_bb << " |M|=" << std::abs(s.M);
        out.push_back(make_report("negativity", os.str(), ref, fast, std::abs(fast - ref), tol));
    }
    return out;
}

std::vector<ModeIndex> default_mode_sample() {
    std::vector<ModeIndex> out;
    for (int ell : {0, 1, 2, 5})
        for (double w : {0.05, 0.2, 0.5, 0.8, 1.0}) out.push_back({ell, w});
    return out;
}

std::vector<OracleReport> oracle_mode_consistency(const SpacetimeParams& p, const std::vector<ModeIndex>& modes) {
    std::vector<OracleReport> out;
    const std::vector<double> rstar = {-4.0 * p.mass, 0.0, 5.0 * p.mass, 13.0 * p.mass};
    std::vector<double> radii;
    for (double s : rstar) radii.push_back(tortoise_inverse(p, s));
    for (const ModeIndex& m : modes) {
        const std::string tag = describe(m);
        const RadialSolution in = solve_in(p, m, rstar);
        for (std::size_t k = 0; k < rstar.size(); ++k) {
            const JaffeResult j = solve_in_jaffe(p, m, radii[k]);
            const RadialSample& s = in.samples[k];
            const cplx v = s.value * std::exp(s.log_scale), d = s.deriv * std::exp(s.log_scale);
            const double wref = std::max(std::abs(m.omega) * p.mass, 0.1) / p.mass;
            const double scale = std::abs(j.value) + std::abs(j.deriv) / wref;
            const double err = std::max(std::abs(v - j.value), std::abs(d - j.deriv) / wref) / scale;
            std::ostringstream os;
            os << tag << " rstar=" << rstar[k];
            out.push_back(make_report("jaffe_vs_ode", os.str(), j.value, v, err, 1e-10));
        }
        const ModeSolution sol = solve_mode(p, m, radii);
        out.push_back(make_report("wronskian", tag, 0.0, sol.wronskian_spread, sol.wronskian_spread, 1e-8));
        const double fi = sol.coeffs.flux_residual_in(), fu = sol.coeffs.flux_residual_up();
        out.push_back(make_report("flux_in", tag, 0.0, fi, fi, 1e-8));
        out.push_back(make_report("flux_up", tag, 0.0, fu, fu, 1e-8));
        const ModeSolution neg = solve_mode(p, {m.ell, -m.omega}, radii);
        double asym = 0.0;
        for (std::size_t j = 0; j < radii.size(); ++j) {
            asym = std::max({asym, std::abs(neg.rbar_in[j] - std::conj(sol.rbar_in[j])),
                             std::abs(neg.rbar_up[j] - std::conj(sol.rbar_up[j])),
                             std::abs(neg.rbar_in_deriv[j] - std::conj(sol.rbar_in_deriv[j])),
                             std::abs(neg.rbar_up_deriv[j] - std::conj(sol.rbar_up_deriv[j]))});
        }
        out.push_back(make_report("conjugation", tag, 0.0, asym, asym, 0.0));
    }

    const ModeSolution barrier = solve_mode(p, {20, 0.05 / p.mass}, std::vector<double>{6.0 * p.mass});
    const double refl = std::abs(barrier.coeffs.refl_in);
    out.push_back(make_report("barrier_reflection", "l=20 omega=0.05/M", 1.0, refl, 1.0 - refl, 1e-3));

    // Fixed-order Taylor steps at two step sizes against the adaptive solution.
    const std::vector<double> grid = {tortoise(p, 8.0 * p.mass)};
    const ModeIndex om{1, 0.5 / p.mass};
    const auto at = [&](const SolverOptions& o) {
        const RadialSample s = solve_in(p, om, grid, o).samples[0];
        return s.value * std::exp(s.log_scale);
    };
    const cplx ref = at(SolverOptions{});
    SolverOptions o;
    o.taylor_order = 6;
    o.adaptive_order = false;
    o.step_fraction = 1e9;
    o.phase_step = 1e9;
    o.max_step = 0.2 * p.mass;
    const double e1 = std::abs(at(o) - ref);
    o.max_step = 0.1 * p.mass;
    const double e2 = std::abs(at(o) - ref);
    const double order = std::log2(e1 / e2);
    out.push_back(make_report("integrator_order", "taylor order 6, steps 0.2M and 0.1M", 6.0, order,
                              std::abs(order - 6.0) / 6.0, 1.0 / 6.0));
    return out;
}

CoarseMSpec default_coarse_m() {
    CoarseMSpec s;
    s.pair.a = {6.009, 2.0, 1.0, 1.0, 0.0};
    s.pair.b = {8.0, 2.0, 1.0, 1.0, 14.0};
    s.pair.gamma = 2.5;
    return s;
}

std::vector<OracleReport> oracle_coarse_m(const SpacetimeParams& p, const CoarseMSpec& spec, double tol) {
    const DetectorSpec& A = spec.pair.a;
    const DetectorSpec& B = spec.pair.b;
    GridSpec g;
    g.ell_max = spec.ell_cut;
    g.omega_min = spec.omega_step;
    g.omega_step = spec.omega_step;
    g.omega_max = spec.omega_max;
    g.radii = {A.r};
    if (B.r != A.r) g.radii.push_back(B.r);
    std::sort(g.radii.begin(), g.radii.end());
    const ModeTable table = build(g, p);

    // Time integrals depend on the detectors only, not on the state.
    const double na = A.lapse_root(p), nb = B.lapse_root(p);
    const double ea = A.gap * na, eb = B.gap * nb;
    const std::size_t n = table.n_omega();
    std::vector<cplx> ab_pos(n), ab_neg(n), ba_pos(n), ba_neg(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double om = table.grid.omega_at(k) / p.mass;
        for (int sgn : {1, -1}) {
            const double o = sgn * om;
            (sgn > 0 ? ab_pos : ab_neg)[k] = window_nested_quadrature(o + eb, ea - o, B.width, A.width, B.center,
                                                                      A.center);
            (sgn > 0 ? ba_pos : ba_neg)[k] = window_nested_quadrature(o + ea, eb - o, A.width, B.width, A.center,
                                                                      B.center);
        }
    }
    const double pref = -A.coupling * B.coupling * na * nb / (16.0 * kPi * kPi);
    const double h = spec.omega_step / p.mass;

    std::vector<OracleReport> out;
    for (FieldState st : spec.states) {
        cplx ref(0.0, 0.0);
        for (int ell = 0; ell <= spec.ell_cut; ++ell) {
            cplx sum(0.0, 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                const double om = table.grid.omega_at(k);
                const double wk = (k == 0 || k + 1 == n) ? 0.5 * h : h;
                const cplx hab_p = kernel(st, table, ell, om, A.r, B.r) / om;
                const cplx hab_n = kernel(st, table, ell, -om, A.r, B.r) / -om;
                const cplx hba_p = kernel(st, table, ell, om, B.r, A.r) / om;
                const cplx hba_n = kernel(st, table, ell, -om, B.r, A.r) / -om;
                sum += wk * (hab_p * ab_pos[k] + hab_n * ab_neg[k] + hba_p * ba_pos[k] + hba_n * ba_neg[k]);
            }
            ref += (2.0 * ell + 1.0) * boost::math::legendre_p(ell, std::cos(spec.pair.gamma)) * sum;
        }
        ref *= pref;

        DetectorPairSpec pair = spec.pair;
        pair.state = st;
        ConvergenceControls c;
        c.ell_cut = spec.ell_cut;
        const cplx fast = M_term(p, pair, table, c).value;
        const double err = std::abs(fast - ref) / std::abs(ref);
        std::ostringstream os;
        os << to_string(st) << " l<=" << spec.ell_cut << " omega_step=" << spec.omega_step;
        out.push_back(make_report("coarse_m", os.str(), ref, fast, err, tol));
    }
    return out;
}

}  // namespace sdet
