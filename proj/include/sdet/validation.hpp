#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdet/response.hpp"

namespace sdet {

struct OracleReport {
    std::string name;
    std::string sample;
    cplx reference;
    cplx fast;
    double rel_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

bool all_passed(const std::vector<OracleReport>& reports);
// One line per check: name, pass/fail, error, tolerance, sample.
std::string format_report(const OracleReport& r);

// Gaussian-window integrals. A sample with nested = false checks the single
// window integral at (nu, T, t0) only.
struct WindowSample {
    double nu = 0.0, mu = 0.0;
    double T = 1.0, Tp = 1.0;
    double t0 = 0.0, t0p = 0.0;
    bool nested = true;
};

// Random samples with |nu| T, |mu| Tp <= 20; every fourth sample has widths
// differing by a factor of ten. The identity sample nu = mu = 0 comes first.
std::vector<WindowSample> window_samples(std::size_t n, std::uint64_t seed);

// Time-domain quadrature references over t0 +- 8T, independent of the
// closed forms.
cplx window_full_quadrature(double nu, double T, double t0);
cplx window_nested_quadrature(double nu, double mu, double T, double Tp, double t0, double t0p);

// Error is measured against max(|reference|, L1 norm of the integrand).
std::vector<OracleReport> oracle_window_integrals(const std::vector<WindowSample>& samples, double tol = 1e-10);

struct NegativitySample {
    double L_aa = 0.0, L_bb = 0.0;
    cplx L_ab, M;
};

// Entries uniform in magnitude up to max_entry; the first two samples are the
// M = 0 and L_aa = L_bb reductions.
std::vector<NegativitySample> negativity_samples(std::size_t n, std::uint64_t seed, double max_entry = 1e-4);

// Negativity from the eigenvalues of the partial transpose of the
// leading-order density matrix, restricted to first order in the entries.
double partial_transpose_negativity(const NegativitySample& s);

std::vector<OracleReport> oracle_partial_transpose(const std::vector<NegativitySample>& samples,
                                                   double tol = 1e-10);

// Horizon series vs Taylor integration on r* in {-4, 0, 5, 13}, Wronskian
// spread, both flux identities and conjugation symmetry per mode, plus the
// barrier reflection and integrator order checks.
std::vector<ModeIndex> default_mode_sample();
std::vector<OracleReport> oracle_mode_consistency(const SpacetimeParams& p, const std::vector<ModeIndex>& modes);

// M on a coarse grid (l <= 5, omega step 0.05 / M) through the closed-form
// path, against an omega trapezoid of quadratured time integrals.
struct CoarseMSpec {
    DetectorPairSpec pair;
    int ell_cut = 5;
    double omega_step = 0.05;
    double omega_max = 10.0;
    std::vector<FieldState> states{FieldState::boulware, FieldState::unruh, FieldState::hartle_hawking};
};
CoarseMSpec default_coarse_m();
std::vector<OracleReport> oracle_coarse_m(const SpacetimeParams& p, const CoarseMSpec& spec, double tol = 1e-8);

}  // namespace sdet
