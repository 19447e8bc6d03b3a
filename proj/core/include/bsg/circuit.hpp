#pragma once

#include <complex>

#include "bsg/params.hpp"

namespace bsg::circuit {

using complexd = std::complex<double>;

// All impedances follow the convention in which an inductor reads -i w L and
// a capacitor +i/(w C); this is the complex conjugate of the engineering
// (e^{+jwt}) convention, so passivity still means Re Z >= 0.
// to_engineering()/from_engineering() convert a value at real frequency.
inline complexd to_engineering(complexd z) { return std::conj(z); }
inline complexd from_engineering(complexd z) { return std::conj(z); }

/// Flux-tunable SQUID Josephson energy,
/// E_J(Phi) = E_J(0) sqrt(cos^2(pi f) + d^2 sin^2(pi f)), f = Phi/Phi_Q.
double ej_of_flux(const SquidParams& squid, double flux_frac);

/// Array dispersion w(k) = sin(k/2) / sqrt(L (C sin^2(k/2) + C_g/4)), k in (0, pi].
double dispersion_omega(const ArrayParams& array, double k);

/// Group velocity dw/dk at real k in (0, pi).
double dispersion_domega_dk(const ArrayParams& array, double k);

/// Inverse dispersion. Real k in (0, pi) below the plasma frequency; above it
/// the evanescent branch with Im k > 0 (impedances are even in k, so the sign
/// choice fixes decay into the array). Reports a pole at w = w_p.
/// series_resistance adds a per-junction resistance in series with L.
complexd dispersion_k(const ArrayParams& array, double omega, double series_resistance = 0.0);

struct TwoPortImpedance {
    complexd z_a;  // diagonal, island 0 (or N) to ground
    complexd z_ab; // off-diagonal
};

/// Two-port impedance matrix [[Z_a, Z_ab], [Z_ab, Z_a]] of the bare array,
/// ports at islands 0 and N. Evaluated in a form stable for any N and complex
/// k (no overflowing hyperbolics). Throws PoleError near array resonances.
TwoPortImpedance impedance_matrix(const ArrayParams& array, double omega,
                                  double series_resistance = 0.0);

/// Semi-infinite array input impedance (N -> inf limit). Pole at w = 1/sqrt(LC).
complexd z_infinity(const ArrayParams& array, double omega);

/// Environmental impedance shunting the weak link: array loaded by the feed
/// line at the far end, Z_env = Z_a - Z_ab^2 / ((Z_tl - iX)/2 + Z_a).
complexd z_env(const DeviceParams& device, double omega, double series_resistance = 0.0);

/// Linearized weak link: parallel L_J*, C_J under the sign convention above,
/// Z_w = (w C_J / i + i/(L_J* w))^{-1}. lj_star may be +infinity (open inductor).
/// Throws PoleError at the SQUID resonance 1/sqrt(L_J* C_J).
complexd z_weak_linear(const SquidParams& squid, double lj_star, double omega);

/// Array terminated by a weak link of impedance z_w, seen from island N:
/// Z_a+w = Z_a - Z_ab^2 / (Z_w + Z_a).
complexd z_aw(const DeviceParams& device, complexd z_w, double omega,
              double series_resistance = 0.0);

/// Transmission through the T-junction: S21 = 2 Z_N / Z_tl with
/// Z_N = (1/W + 1/Z_a+w)^{-1}, W = (Z_tl - iX)/2.
complexd s21(const DeviceParams& device, complexd z_w, double omega,
             double series_resistance = 0.0);

/// Free spectral range (Hz) of the bare array in the linear band,
/// 1 / (2 (N+1/2) sqrt(L C_g)).
double fsr_linear(const ArrayParams& array);

/// Local free spectral range (Hz) at frequency w, from the mode spacing
/// dw/dk * pi/(N+1/2). Requires w inside the propagating band.
double fsr_at(const ArrayParams& array, double omega);

} // namespace bsg::circuit
