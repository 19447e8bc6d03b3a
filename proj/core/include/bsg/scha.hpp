#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "bsg/params.hpp"

namespace bsg::scha {

using complexd = std::complex<double>;

struct FluctuationResult {
    double phi_sq = 0.0;          // <phi_0^2>
    double quadrature_error = 0.0; // absolute error estimate, incl. tail truncation
};

struct SchaSolution {
    double ej_star = 0.0;      // J
    double lj_star = 0.0;      // H, (hbar/2e)^2 / E_J*
    double omega_j_star = 0.0; // rad/s, 1/sqrt(C_J L_J*)
    double zj_star = 0.0;      // Ohm, sqrt(L_J*/C_J)
    double phi_sq = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct FluctuationOptions {
    double series_resistance = 0.0; // per-junction loss used to broaden array modes
    double rel_tol = 1e-7;
    double omega_cut_factor = 1.5;  // adaptive band ends at this multiple of w_p
    double tail_omega_factor = 2e3; // smooth-tail quadrature ends here (times w_p)
};

/// Ideal-environment phase fluctuations,
///   <phi^2> = (Z/R_Q) Int_0^inf dxi / [xi + (Z/Z_J)^2 (xi-1)^2],
/// with alpha_env = Z/R_Q and zj_over_z = Z_J/Z. Adaptive quadrature on a
/// finite window plus the closed-form tail of the rational integrand.
/// Throws AccuracyError when the requested tolerance is not met.
double phi2_ohmic(double alpha_env, double zj_over_z, double rel_tol = 1e-8);

/// Zero-temperature phase fluctuations of the linearized weak link embedded in
/// the device, <phi^2> = 2 Int dw Re Z_0(w) / (w R_Q), with
/// Z_0 = (1/Z_w + 1/Z_env)^{-1}. The integration grid seeds one panel per
/// array resonance so every Fabry-Perot peak is refined.
FluctuationResult phase_fluctuations(const DeviceParams& device, double lj_star,
                                     const FluctuationOptions& opts = {});

/// Same integral against a caller-supplied environment (test oracles, ideal
/// ohmic baths). env(omega) must return the environmental impedance.
FluctuationResult phase_fluctuations_env(const std::function<complexd(double)>& env,
                                         const SquidParams& squid, double lj_star,
                                         double omega_peak_hint,
                                         const FluctuationOptions& opts = {});

struct SolveOptions {
    double mixing = 0.5;   // damped fixed-point mixing, halved on oscillation
    FluctuationOptions fluctuation{};
    // Evaluate the fluctuation integral at a small array loss floor (which
    // merges the unresolvably dense modes near the band edge) and Richardson
    // extrapolate the floor away. Floor in units of Z_c.
    bool extrapolate_loss = true;
    double loss_floor = 1e-4;
};

/// Damped fixed-point solve of E_J* = E_J(flux) exp(-<phi^2>[E_J*]/2).
/// Non-convergence (mean-field breakdown near half flux) is returned as a
/// flagged solution, not thrown. The default tol is matched to the fluctuation
/// quadrature noise; tighten both together.
SchaSolution scha_solve(const DeviceParams& device, double flux_frac, double tol = 1e-5,
                        int max_iter = 100, const SolveOptions& opts = {});

/// Fixed point against a perfectly ohmic environment Z_env = alpha R_Q with no
/// plasma cutoff (uses phi2_ohmic). ec is the charging energy (2e)^2/C_J.
SchaSolution scha_solve_ohmic(double alpha, double ej, double ec, const Constants& constants,
                              double tol = 1e-9, int max_iter = 200, double mixing = 0.5);

/// Renormalization scaling law E_J* = min(E_J, E_J [(2 pi alpha)^2 E_J / (2 E_C)]^{alpha/(1-alpha)}).
/// alpha must be in (0, 1).
double scaling_law(double ej, double ec, double alpha);

/// Boundary phase shift of the mode-quantization condition
/// (N+1/2) k + theta = pi (l+1/2), from
/// cot(theta) = q(w) [1 - (2 L_J*/L) (1-w^2 L C)/(1 - w^2 L_J* C_J)],
/// q = (w/2) sqrt(C_g L)/sqrt(1-w^2/w_p^2). Continuous arccot branch with
/// theta in (0, pi); wraps through 0/pi at the cotangent pole. lj_star may be
/// +infinity (bare capacitive boundary).
double phase_shift_theta(const DeviceParams& device, double lj_star, double omega);

struct PhaseShiftOptions {
    // By default the half-flux reference takes L_J* infinite. Optionally use
    // the finite value implied by the SQUID asymmetry instead.
    bool d_corrected_reference = false;
    double reference_lj = 0.0; // used when d_corrected_reference is true
};

/// Relative phase shift delta_theta = theta(flux) - theta(Phi_Q/2), folded to
/// [0, pi). mode_freqs_at_half locates the matching reference mode so theta is
/// evaluated at each mode's own resonance.
double relative_phase_shift(const DeviceParams& device, double flux_frac,
                            const std::vector<double>& mode_freqs_at_half, double omega,
                            double lj_star_at_flux,
                            const PhaseShiftOptions& opts = {});

} // namespace bsg::scha
