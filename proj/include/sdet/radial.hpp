#pragma once

#include <complex>
#include <span>
#include <vector>

#include "sdet/geometry.hpp"

namespace sdet {

using cplx = std::complex<double>;

struct ModeIndex {
    int ell = 0;
    double omega = 0.0;  // 1/length, same units as the mass
};

// Radial function at one point. The true value is value * exp(log_scale) and
// likewise for the r*-derivative; the scale keeps strongly growing solutions
// representable.
struct RadialSample {
    double rstar = 0.0;
    double r = 0.0;
    cplx value;
    cplx deriv;  // d/dr*
    double log_scale = 0.0;
};

struct RadialSolution {
    ModeIndex mode;
    std::vector<RadialSample> samples;  // ascending in r
};

// Wronskian W(a, b) = a db/dr* - b da/dr*, returned as a mantissa with the
// combined log scale of both samples.
struct ScaledValue {
    cplx mantissa;
    double log_scale = 0.0;
    cplx value() const;
};
ScaledValue wronskian(const RadialSample& a, const RadialSample& b);

// Incidence amplitude I stored as log|I| and arg I, reflection amplitudes as
// ratios rho/I. All three stay finite when |I| itself overflows.
struct ScatteringCoeffs {
    double log_abs_incidence = 0.0;
    double arg_incidence = 0.0;
    cplx refl_in;  // rho_in / I
    cplx refl_up;  // rho_up / I

    cplx incidence() const;
    cplx rho_in() const;
    cplx rho_up() const;
    // | |rho/I|^2 + 1/|I|^2 - 1 |, the normalized form of |I|^2 - |rho|^2 = 1.
    double flux_residual_in() const;
    double flux_residual_up() const;
};

struct SolverOptions {
    int taylor_order = 40;       // maximum Taylor terms per step
    double step_fraction = 0.5;  // step <= fraction * (r - 2M)
    double phase_step = 5.0;     // step <= phase_step / local wavenumber
    double max_step = 0.0;       // hard cap on |step| in units of M (0 = none)
    bool adaptive_order = true;  // stop each Taylor sum once it has converged
    double r_max = 0.0;          // up-mode boundary radius in units of M (0 = automatic)
};

double rw_potential(const SpacetimeParams& p, int ell, double r);

// Up mode, unit outgoing amplitude at the outer boundary, integrated inward
// and sampled on the given r* values.
RadialSolution solve_up(const SpacetimeParams& p, ModeIndex mode, std::span<const double> rstar_grid,
                        const SolverOptions& opt = {});

// In mode from the horizon series, integrated outward and sampled on the given r* values.
RadialSolution solve_in(const SpacetimeParams& p, ModeIndex mode, std::span<const double> rstar_grid,
                        const SolverOptions& opt = {});

struct JaffeResult {
    cplx value;
    cplx deriv;            // d/dr*
    int terms = 0;         // n_max + 1
    cplx epsilon;          // last relative remainder estimate
    double cancellation;   // largest term over |sum|
};

// In mode by direct summation of the horizon series.
JaffeResult solve_in_jaffe(const SpacetimeParams& p, ModeIndex mode, double r);

// Jaffe series coefficients a_0 .. a_{n-1}.
std::vector<cplx> jaffe_coefficients(int ell, double omega_bar, int n);

ScatteringCoeffs extract_coeffs(ModeIndex mode, const RadialSolution& in, const RadialSolution& up);

enum class ModeKind { in, up };

// R / (r I) and its r*-derivative at a sample of the matching solution.
cplx rescaled_mode(const RadialSample& s, const ScatteringCoeffs& c);
cplx rescaled_mode_deriv(const SpacetimeParams& p, const RadialSample& s, const ScatteringCoeffs& c);

// Everything the cache stores for one (l, omega): coefficients and rescaled
// modes with r*-derivatives at each requested radius. Negative omega is served
// by conjugating the positive-frequency solution.
struct ModeSolution {
    ModeIndex mode;
    ScatteringCoeffs coeffs;
    std::vector<cplx> rbar_in, rbar_in_deriv, rbar_up, rbar_up_deriv;
    double wronskian_spread = 0.0;  // max relative deviation of W over the sampled points
};

ModeSolution solve_mode(const SpacetimeParams& p, ModeIndex mode, std::span<const double> radii,
                        const SolverOptions& opt = {});

}  // namespace sdet
