#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdet/states.hpp"

namespace sdet {

struct DetectorSpec {
    double r = 6.0;          // units of M
    double gap = 1.0;        // Omega, 1/M
    double coupling = 1.0;   // lambda
    double width = 1.0;      // T, coordinate time, M
    double center = 0.0;     // t0, M

    double lapse_root(const SpacetimeParams& p) const;  // N = sqrt(f(r))
    void validate(const SpacetimeParams& p) const;
};

// Coordinate width that keeps the proper width equal to t_inf: T(r) = t_inf / sqrt(f(r)).
double proper_width(const SpacetimeParams& p, double r, double t_inf);

struct DetectorPairSpec {
    DetectorSpec a, b;
    double gamma = 0.0;
    FieldState state = FieldState::boulware;
};

enum class Which { a, b };

struct ConvergenceControls {
    int ell_cut = 100;
    bool pairwise = true;  // pairwise (true) or Kahan (false) summation
    InTermOrdering ordering = InTermOrdering::standard;
    double tail_threshold = 1e-3;
};

struct Diagnostics {
    double last_ell_relative = 0.0;     // |last l summand| / |sum|
    double last_omega_relative = 0.0;   // |integrand at omega_max| * omega_max / |sum|
    double sliver_bound = 0.0;          // omega_min * |integrand at omega_min|, absolute
    bool tail_warning = false;
    std::vector<std::string> warnings;

    // Warnings from o are prefixed with "label: " when a label is given.
    void merge(const Diagnostics& o, const std::string& label = "");
};

// Closed-form Gaussian switching integrals.
cplx window_integral_full(double nu, double T, double t0);
cplx window_integral_nested(double nu, double mu, double T_d, double T_dp, double t0_d, double t0_dp);

// Per-l frequency integrals with all l-independent prefactors applied. The
// response is sum_l (2l + 1) P_l(cos gamma) terms[l].
struct EllSeries {
    std::vector<cplx> terms;
    std::vector<double> first_omega;  // |integrand| at omega_min, per l
    std::vector<double> last_omega;   // |integrand| at omega_max, per l
    double omega_min = 0.0, omega_max = 0.0;
};

enum class KernelPart { full, symmetric, antisymmetric };

EllSeries L_series(const SpacetimeParams& p, const DetectorPairSpec& pair, Which d, Which dp,
                   const ModeTable& table, const ConvergenceControls& c);
EllSeries M_series(const SpacetimeParams& p, const DetectorPairSpec& pair, const ModeTable& table,
                   const ConvergenceControls& c, KernelPart part = KernelPart::full);
cplx resum(const EllSeries& s, double gamma, const ConvergenceControls& c, Diagnostics* diag = nullptr);

struct TermResult {
    cplx value;
    Diagnostics diag;
};
TermResult L_term(const SpacetimeParams& p, const DetectorPairSpec& pair, Which d, Which dp,
                  const ModeTable& table, const ConvergenceControls& c);
TermResult M_term(const SpacetimeParams& p, const DetectorPairSpec& pair, const ModeTable& table,
                  const ConvergenceControls& c);

struct MSplit {
    cplx plus, minus;
    Diagnostics diag;
};
MSplit M_split(const SpacetimeParams& p, const DetectorPairSpec& pair, const ModeTable& table,
               const ConvergenceControls& c);

double negativity(double L_aa, double L_bb, cplx M);

struct PairResponse {
    double L_aa = 0.0, L_bb = 0.0;
    cplx L_ab, M, M_plus, M_minus;
    double N2 = 0.0;
    double lambda_a = 1.0, lambda_b = 1.0;  // couplings the entries were computed with
    double recombination_error = 0.0;       // |M - (M+ + i M-)| / |M|
    Diagnostics diag;
};

PairResponse evaluate_pair(const SpacetimeParams& p, const DetectorPairSpec& pair, const ModeTable& table,
                           const ConvergenceControls& c);

// Leading-order two-detector state in the basis gg, eg, ge, ee, rescaled to
// the given couplings.
Eigen::Matrix4cd density_matrix(const PairResponse& r, double lambda_a, double lambda_b);

// Pairwise and Kahan summation with a fixed reduction order.
cplx pairwise_sum(const cplx* v, std::size_t n);
cplx kahan_sum(const cplx* v, std::size_t n);

}  // namespace sdet
