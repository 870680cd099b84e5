#include "sdet/radial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sdet/errors.hpp"

namespace sdet {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

// Internal units: M = 1, so r means r/M and omega means M omega.

double lapse1(double r) { return 1.0 - 2.0 / r; }
double tortoise1(double r) { return r + 2.0 * std::log(0.5 * r - 1.0); }
double potential1(int ell, double r) {
    const double l2 = ell * (ell + 1.0);
    return lapse1(r) * (2.0 / (r * r * r) + l2 / (r * r));
}

struct OdeState {
    double r;
    cplx psi;
    cplx dpsi;  // d/dr
    double log_scale;
};

void renormalize(OdeState& s) {
    const double mag = std::abs(s.psi) + std::abs(s.dpsi);
    if (mag > 1e100 || (mag < 1e-100 && mag > 0.0)) {
        const double lg = std::log(mag);
        s.psi /= mag;
        s.dpsi /= mag;
        s.log_scale += lg;
    }
}

// One Taylor step of r^2 (r-2)^2 psi'' + 2 r (r-2) psi' + (w^2 r^4 - (r-2)(L r + 2)) psi = 0
// from r0 to r0 + h. Works with scaled coefficients b_k = a_k h^k. Returns false
// if the adaptive sum did not converge within the term budget.
bool taylor_step(int ell, double omega, const SolverOptions& opt, OdeState& s, double h) {
    const double a = s.r;
    const double b = s.r - 2.0;
    const double L = ell * (ell + 1.0);
    const double w2 = omega * omega;
    const double q0 = a * b, q1 = a + b;

    // Coefficients in y = x / h.
    double p2[5] = {q0 * q0, 2.0 * q0 * q1, q1 * q1 + 2.0 * q0, 2.0 * q1, 1.0};
    double p1[3] = {2.0 * q0, 2.0 * q1, 2.0};
    double p0[5] = {w2 * a * a * a * a - b * (L * a + 2.0), w2 * 4.0 * a * a * a - (L * (a + b) + 2.0),
                    w2 * 6.0 * a * a - L, w2 * 4.0 * a, w2};
    double hp = 1.0;
    for (int j = 0; j < 5; ++j) {
        p2[j] *= hp;
        if (j < 3) p1[j] *= hp * h;
        p0[j] *= hp * h * h;
        hp *= h;
    }

    const int nmax = opt.taylor_order;
    cplx bk[64];
    const int cap = std::min(nmax, 63);
    bk[0] = s.psi;
    bk[1] = s.dpsi * h;
    cplx sum = bk[0] + bk[1];
    cplx dsum = bk[1];
    const double scale = std::abs(bk[0]) + std::abs(bk[1]);
    int small_run = 0;
    bool converged = !opt.adaptive_order;
    for (int k = 0; k + 2 <= cap; ++k) {
        cplx acc(0.0, 0.0);
        for (int j = 1; j <= 4 && j <= k + 1; ++j) {
            const int idx = k - j + 2;
            acc += p2[j] * static_cast<double>(idx * (idx - 1)) * bk[idx];
        }
        for (int j = 0; j <= 2 && j <= k; ++j) {
            const int idx = k - j + 1;
            acc += p1[j] * static_cast<double>(idx) * bk[idx];
        }
        for (int j = 0; j <= 4 && j <= k; ++j) acc += p0[j] * bk[k - j];
        const int n = k + 2;
        bk[n] = -acc / (p2[0] * n * (n - 1));
        sum += bk[n];
        dsum += static_cast<double>(n) * bk[n];
        if (opt.adaptive_order) {
            const double mag = n * std::abs(bk[n]);
            const double ref = scale + std::abs(sum) + std::abs(dsum);
            small_run = mag < 1e-17 * ref ? small_run + 1 : 0;
            if (small_run >= 2) {
                converged = true;
                break;
            }
        }
    }
    if (!converged) return false;
    s.r += h;
    s.psi = sum;
    s.dpsi = dsum / h;
    return true;
}

double choose_step(int ell, double omega, const SolverOptions& opt, double r) {
    const double f = lapse1(r);
    const double kappa = std::sqrt(omega * omega + potential1(ell, r)) / f;
    double h = std::min(opt.step_fraction * (r - 2.0), opt.phase_step / kappa);
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
    return h;
}

// Integrates to each target radius in order (all on one side of s.r), recording samples.
std::vector<RadialSample> propagate(int ell, double omega, const SolverOptions& opt, OdeState s,
                                    const std::vector<double>& targets) {
    std::vector<RadialSample> out;
    out.reserve(targets.size());
    for (double target : targets) {
        int guard = 0;
        while (s.r != target) {
            if (++guard > 2000000) throw ConvergenceError("radial integration exceeded its step budget");
            const double dir = target > s.r ? 1.0 : -1.0;
            double h = choose_step(ell, omega, opt, s.r);
            bool last = false;
            if (h >= std::abs(target - s.r)) {
                h = std::abs(target - s.r);
                last = true;
            }
            OdeState trial = s;
            int halvings = 0;
            while (!taylor_step(ell, omega, opt, trial, dir * h)) {
                if (++halvings > 30) throw ConvergenceError("Taylor step failed to converge");
                h *= 0.5;
                last = false;
                trial = s;
            }
            if (last) trial.r = target;
            s = trial;
            renormalize(s);
        }
        RadialSample smp;
        smp.r = target;
        smp.rstar = tortoise1(target);
        smp.value = s.psi;
        smp.deriv = s.dpsi * lapse1(target);
        smp.log_scale = s.log_scale;
        out.push_back(smp);
    }
    return out;
}

// Outgoing solution exp(i w r*) sum c_k r^-k at large r with c_0 = 1.
OdeState up_boundary(int ell, double omega, double r) {
    const double L = ell * (ell + 1.0);
    const cplx denom_unit = 2.0 * kI * omega;
    cplx c_prev(0.0, 0.0), c(1.0, 0.0);
    cplx u(1.0, 0.0), du(0.0, 0.0);
    double rk = 1.0;  // r^-k
    double largest = 1.0;
    double last_term = 1.0;
    int small_run = 0;
    bool converged = false;
    for (int k = 0; k < 4000; ++k) {
        const cplx c_next = ((k * (k + 1.0) - L) * c - 2.0 * k * k * c_prev) / (denom_unit * (k + 1.0));
        rk /= r;
        const cplx term = c_next * rk;
        const double mag = std::abs(term);
        if (!std::isfinite(mag)) throw ConvergenceError("up-mode boundary series overflowed");
        u += term;
        du += -(k + 1.0) * term / r;
        largest = std::max(largest, mag);
        if (mag < 1e-17 * std::abs(u)) {
            if (++small_run >= 2) {
                converged = true;
                break;
            }
        } else {
            small_run = 0;
        }
        // Past the flat-space part the series is asymptotic: growth means divergence.
        if (k > ell + 2 && mag > last_term && mag > 1e-13 * std::abs(u)) break;
        last_term = mag;
        c_prev = c;
        c = c_next;
    }
    if (!converged) throw ConvergenceError("up-mode boundary series did not reach tolerance; enlarge r_max");
    if (largest > 1e3 * std::abs(u)) {
        throw ConvergenceError("up-mode boundary series loses too many digits; enlarge r_max");
    }
    const double f = lapse1(r);
    const cplx phase = std::exp(kI * omega * tortoise1(r));
    OdeState s;
    s.r = r;
    s.psi = phase * u;
    s.dpsi = phase * (kI * omega * u / f + du);
    s.log_scale = 0.0;
    return s;
}

struct JaffeSum {
    cplx value;
    cplx deriv;  // d/dr*, M = 1
    int terms;
    cplx epsilon;
    double cancellation;
};

JaffeSum jaffe_sum(int ell, double omega, double r) {
    const double rb = 0.5 * r;
    const double wb = 2.0 * omega;
    const double x = (rb - 1.0) / rb;
    const double L = ell * (ell + 1.0);

    cplx a_prev2(0.0, 0.0);
    cplx a_prev = std::exp(cplx(0.0, -2.0 * wb));
    cplx sum = a_prev;
    cplx dsum(0.0, 0.0);  // sum n a_n x^(n-1)
    double xn = 1.0;      // x^(n-1)
    double largest = std::abs(a_prev);
    int small_run = 0;
    cplx eps(1.0, 0.0);
    int n = 1;
    const int cap = 5000;
    for (; n <= cap; ++n) {
        const double m = n - 1.0;
        const cplx alpha = (m + 1.0) * cplx(m + 1.0, -2.0 * wb);
        const cplx beta = -1.0 - 2.0 * m * (m + 1.0) - L + 4.0 * wb * cplx(2.0 * wb, 1.0 + 2.0 * m);
        const cplx gm = cplx(m, -2.0 * wb) * cplx(m, -2.0 * wb);
        const cplx a_n = -(a_prev * beta + a_prev2 * gm) / alpha;
        dsum += static_cast<double>(n) * a_n * xn;
        xn *= x;
        const cplx term = a_n * xn;
        eps = term / sum;
        sum += term;
        largest = std::max(largest, std::abs(term));
        if (std::abs(eps.real()) < 1e-16 && std::abs(eps.imag()) < 1e-16) {
            if (++small_run >= 3) break;
        } else {
            small_run = 0;
        }
        a_prev2 = a_prev;
        a_prev = a_n;
    }
    if (n > cap) {
        throw ConvergenceError("Jaffe series hit the 5000-term cap; achieved |epsilon| = " +
                               std::to_string(std::abs(eps)));
    }
    // Prefactor rb^(2i wb) (rb - 1)^(-i wb) exp(i wb rb) has unit modulus.
    const double phase = wb * (2.0 * std::log(rb) - std::log(rb - 1.0) + rb);
    const cplx pref = std::exp(cplx(0.0, phase));
    const cplx dlog = kI * wb * (2.0 / rb - 1.0 / (rb - 1.0) + 1.0);
    const cplx value = pref * sum;
    const cplx d_drb = value * dlog + pref * dsum / (rb * rb);
    JaffeSum out;
    out.value = value;
    out.deriv = lapse1(r) * 0.5 * d_drb;
    out.terms = std::min(n, cap) + 1;
    out.epsilon = eps;
    out.cancellation = largest / std::abs(sum);
    return out;
}

void check_mode(const SpacetimeParams& p, ModeIndex mode) {
    if (!(p.mass > 0.0)) throw DomainError("mass must be positive");
    if (mode.ell < 0) throw DomainError("negative angular momentum number");
    if (!(mode.omega > 0.0) || !std::isfinite(mode.omega)) {
        throw DomainError("radial solvers require omega > 0; negative frequencies follow by conjugation");
    }
}

// Horizon-side start for the in mode: the series is summed where it is well
// conditioned, close enough to the horizon for large frequencies.
double jaffe_start_radius(double omega, double r_floor) {
    const double wb = 2.0 * omega;
    double x = std::min(0.25, 1.0 / (1.0 + wb));
    const double x_floor = 1.0 - 2.0 / r_floor;
    x = std::min(x, x_floor);
    return 2.0 / (1.0 - x);
}

OdeState in_start(int ell, double omega, double r) {
    JaffeSum js = jaffe_sum(ell, omega, r);
    double rr = r;
    for (int tries = 0; js.cancellation > 1e3 && tries < 8; ++tries) {
        rr = 2.0 + 0.5 * (rr - 2.0);
        js = jaffe_sum(ell, omega, rr);
    }
    OdeState s;
    s.r = rr;
    s.psi = js.value;
    s.dpsi = js.deriv / lapse1(rr);
    s.log_scale = 0.0;
    return s;
}

double auto_r_max(int ell, double omega) { return std::max({20.0, 15.0 / omega, 0.5 * ell / omega}); }

OdeState up_start(int ell, double omega, double r_max_req, double r_floor) {
    if (r_max_req > 0.0) return up_boundary(ell, omega, r_max_req);
    double r = std::max(auto_r_max(ell, omega), 2.0 * r_floor);
    for (int tries = 0; tries < 40; ++tries) {
        try {
            return up_boundary(ell, omega, r);
        } catch (const ConvergenceError&) {
            r *= 1.5;
        }
    }
    throw ConvergenceError("up-mode boundary series failed for every tried r_max");
}

std::vector<double> radii_from_rstar(std::span<const double> rstar_grid, double mass) {
    std::vector<double> radii;
    radii.reserve(rstar_grid.size());
    const SpacetimeParams unit{1.0};
    for (double rs : rstar_grid) radii.push_back(tortoise_inverse(unit, rs / mass));
    std::sort(radii.begin(), radii.end());
    return radii;
}

void rescale_solution(RadialSolution& sol, double mass) {
    for (auto& s : sol.samples) {
        s.r *= mass;
        s.rstar *= mass;
        s.deriv /= mass;
    }
}

}  // namespace

cplx ScaledValue::value() const { return mantissa * std::exp(log_scale); }

ScaledValue wronskian(const RadialSample& a, const RadialSample& b) {
    return {a.value * b.deriv - b.value * a.deriv, a.log_scale + b.log_scale};
}

cplx ScatteringCoeffs::incidence() const { return std::polar(std::exp(log_abs_incidence), arg_incidence); }
cplx ScatteringCoeffs::rho_in() const { return refl_in * incidence(); }
cplx ScatteringCoeffs::rho_up() const { return refl_up * incidence(); }
double ScatteringCoeffs::flux_residual_in() const {
    return std::abs(std::norm(refl_in) + std::exp(-2.0 * log_abs_incidence) - 1.0);
}
double ScatteringCoeffs::flux_residual_up() const {
    return std::abs(std::norm(refl_up) + std::exp(-2.0 * log_abs_incidence) - 1.0);
}

double rw_potential(const SpacetimeParams& p, int ell, double r) {
    if (ell < 0) throw DomainError("negative angular momentum number");
    const double m = p.mass;
    if (!(r > 2.0 * m)) throw DomainError("rw_potential: radius at or inside the horizon");
    return potential1(ell, r / m) / (m * m);
}

RadialSolution solve_up(const SpacetimeParams& p, ModeIndex mode, std::span<const double> rstar_grid,
                        const SolverOptions& opt) {
    check_mode(p, mode);
    const double m = p.mass;
    const double w = mode.omega * m;
    std::vector<double> radii = radii_from_rstar(rstar_grid, m);
    const double r_floor = radii.empty() ? 2.5 : radii.back();
    const OdeState start = up_start(mode.ell, w, opt.r_max, r_floor);
    if (!radii.empty() && radii.back() > start.r) {
        throw DomainError("solve_up: grid extends beyond the outer boundary");
    }
    std::vector<double> inward(radii.rbegin(), radii.rend());
    std::vector<RadialSample> samples = propagate(mode.ell, w, opt, start, inward);
    std::reverse(samples.begin(), samples.end());
    RadialSolution sol{mode, std::move(samples)};
    rescale_solution(sol, m);
    return sol;
}

RadialSolution solve_in(const SpacetimeParams& p, ModeIndex mode, std::span<const double> rstar_grid,
                        const SolverOptions& opt) {
    check_mode(p, mode);
    const double m = p.mass;
    const double w = mode.omega * m;
    std::vector<double> radii = radii_from_rstar(rstar_grid, m);
    const double r0 = jaffe_start_radius(w, radii.empty() ? 3.0 : radii.front());
    const OdeState start = in_start(mode.ell, w, r0);
    RadialSolution sol{mode, propagate(mode.ell, w, opt, start, radii)};
    rescale_solution(sol, m);
    return sol;
}

std::vector<cplx> jaffe_coefficients(int ell, double omega_bar, int n) {
    std::vector<cplx> a;
    if (n <= 0) return a;
    a.push_back(std::exp(cplx(0.0, -2.0 * omega_bar)));
    const double L = ell * (ell + 1.0);
    for (int k = 1; k < n; ++k) {
        const double mm = k - 1.0;
        const cplx alpha = (mm + 1.0) * cplx(mm + 1.0, -2.0 * omega_bar);
        const cplx beta = -1.0 - 2.0 * mm * (mm + 1.0) - L + 4.0 * omega_bar * cplx(2.0 * omega_bar, 1.0 + 2.0 * mm);
        const cplx gm = cplx(mm, -2.0 * omega_bar) * cplx(mm, -2.0 * omega_bar);
        const cplx prev2 = k >= 2 ? a[k - 2] : cplx(0.0, 0.0);
        a.push_back(-(a[k - 1] * beta + prev2 * gm) / alpha);
    }
    return a;
}

JaffeResult solve_in_jaffe(const SpacetimeParams& p, ModeIndex mode, double r) {
    check_mode(p, mode);
    const double m = p.mass;
    if (!(r > 2.0 * m)) throw DomainError("solve_in_jaffe: radius at or inside the horizon");
    const JaffeSum js = jaffe_sum(mode.ell, mode.omega * m, r / m);
    return {js.value, js.deriv / m, js.terms, js.epsilon, js.cancellation};
}

ScatteringCoeffs extract_coeffs(ModeIndex mode, const RadialSolution& in, const RadialSolution& up) {
    if (in.samples.empty() || up.samples.empty()) throw DomainError("extract_coeffs: empty solution");
    // Use the outermost shared sample.
    const RadialSample* si = nullptr;
    const RadialSample* su = nullptr;
    for (auto it = in.samples.rbegin(); it != in.samples.rend() && !si; ++it) {
        for (const auto& u : up.samples) {
            if (u.r == it->r) {
                si = &*it;
                su = &u;
                break;
            }
        }
    }
    if (!si) throw DomainError("extract_coeffs: solutions share no sample point");
    const double w = mode.omega;
    const ScaledValue w_io = wronskian(*si, *su);
    RadialSample up_conj = *su;
    up_conj.value = std::conj(su->value);
    up_conj.deriv = std::conj(su->deriv);
    RadialSample in_conj = *si;
    in_conj.value = std::conj(si->value);
    in_conj.deriv = std::conj(si->deriv);
    const cplx w_in_upc = wronskian(*si, up_conj).mantissa;
    const cplx w_up_inc = wronskian(*su, in_conj).mantissa;

    ScatteringCoeffs c;
    const cplx i_mant = w_io.mantissa / (2.0 * kI * w);
    if (std::log(std::abs(i_mant)) + w_io.log_scale < std::log(1e-300)) {
        throw RangeError("extract_coeffs: incidence amplitude below 1e-300");
    }
    c.log_abs_incidence = std::log(std::abs(i_mant)) + w_io.log_scale;
    c.arg_incidence = std::arg(i_mant);
    c.refl_in = -w_in_upc / w_io.mantissa;
    c.refl_up = w_up_inc / w_io.mantissa;
    return c;
}

cplx rescaled_mode(const RadialSample& s, const ScatteringCoeffs& c) {
    const double lg = s.log_scale - c.log_abs_incidence;
    return s.value / s.r * std::polar(std::exp(lg), -c.arg_incidence);
}

cplx rescaled_mode_deriv(const SpacetimeParams& p, const RadialSample& s, const ScatteringCoeffs& c) {
    const double f = 1.0 - 2.0 * p.mass / s.r;
    const double lg = s.log_scale - c.log_abs_incidence;
    return (s.deriv / s.r - s.value * f / (s.r * s.r)) * std::polar(std::exp(lg), -c.arg_incidence);
}

ModeSolution solve_mode(const SpacetimeParams& p, ModeIndex mode, std::span<const double> radii,
                        const SolverOptions& opt) {
    if (mode.omega < 0.0) {
        ModeSolution pos = solve_mode(p, {mode.ell, -mode.omega}, radii, opt);
        pos.mode = mode;
        for (auto* v : {&pos.rbar_in, &pos.rbar_in_deriv, &pos.rbar_up, &pos.rbar_up_deriv}) {
            for (auto& z : *v) z = std::conj(z);
        }
        return pos;
    }
    check_mode(p, mode);
    const double m = p.mass;
    for (double r : radii) {
        if (!(r > 2.0 * m)) throw DomainError("solve_mode: radius at or inside the horizon");
    }
    try {
        const double w = mode.omega * m;
        std::vector<double> pts;
        for (double r : radii) pts.push_back(r / m);
        const double r_lo = pts.empty() ? 3.0 : *std::min_element(pts.begin(), pts.end());
        const double r_hi = pts.empty() ? 3.0 : *std::max_element(pts.begin(), pts.end());
        const double r0 = jaffe_start_radius(w, r_lo);
        const OdeState in0 = in_start(mode.ell, w, r0);
        // Audit points where the Wronskian is also evaluated.
        pts.push_back(in0.r);
        pts.push_back(0.5 * (in0.r + r_lo));
        pts.push_back(std::max(10.0, 2.0 * r_hi));
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

        const OdeState up0 = up_start(mode.ell, w, opt.r_max, pts.back());
        std::vector<RadialSample> in_s = propagate(mode.ell, w, opt, in0, pts);
        std::vector<double> inward(pts.rbegin(), pts.rend());
        std::vector<RadialSample> up_s = propagate(mode.ell, w, opt, up0, inward);
        std::reverse(up_s.begin(), up_s.end());

        RadialSolution in_sol{{mode.ell, w}, in_s};
        RadialSolution up_sol{{mode.ell, w}, up_s};
        ModeSolution out;
        out.mode = mode;
        out.coeffs = extract_coeffs({mode.ell, w}, in_sol, up_sol);

        const ScaledValue ref = wronskian(in_s.back(), up_s.back());
        double spread = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const ScaledValue wk = wronskian(in_s[k], up_s[k]);
            const cplx ratio = wk.mantissa / ref.mantissa * std::exp(wk.log_scale - ref.log_scale);
            spread = std::max(spread, std::abs(ratio - 1.0));
        }
        out.wronskian_spread = spread;

        const SpacetimeParams unit{1.0};
        for (double r : radii) {
            const double ru = r / m;
            const std::size_t k = std::lower_bound(pts.begin(), pts.end(), ru) - pts.begin();
            out.rbar_in.push_back(rescaled_mode(in_s[k], out.coeffs) / m);
            out.rbar_up.push_back(rescaled_mode(up_s[k], out.coeffs) / m);
            out.rbar_in_deriv.push_back(rescaled_mode_deriv(unit, in_s[k], out.coeffs) / (m * m));
            out.rbar_up_deriv.push_back(rescaled_mode_deriv(unit, up_s[k], out.coeffs) / (m * m));
        }
        return out;
    } catch (const ModeSolveError&) {
        throw;
    } catch (const std::exception& e) {
        throw ModeSolveError(mode.ell, mode.omega, e.what());
    }
}

}  // namespace sdet
