#pragma once

#include <complex>
#include <vector>

namespace sdet {

using cplx = std::complex<double>;

// Faddeeva function w(z) = exp(-z^2) erfc(-iz).
cplx faddeeva_w(cplx z);

// Complex error functions. Inputs must be finite with |z| <= 1e3; a result
// that overflows double precision raises RangeError.
cplx erf_complex(cplx z);
cplx erfc_complex(cplx z);
cplx erfi_complex(cplx z);

// exp(log_scale) * erfc(z), with the exponentials combined before evaluation
// so that a huge erfc paired with a tiny prefactor stays finite.
cplx scaled_erfc(cplx z, cplx log_scale);

// Legendre polynomial P_l(x), l <= 200, |x| <= 1.
double legendre_p(int ell, double x);

// P_0(x) .. P_lmax(x) by the same recurrence.
std::vector<double> legendre_p_all(int lmax, double x);

}  // namespace sdet
