#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bsg/gf.hpp"
#include "bsg/losses.hpp"
#include "bsg/params.hpp"

namespace bsg::spectroscopy {

using complexd = std::complex<double>;

/// One transmission sweep.
struct Trace {
    std::vector<double> freq_hz;  // strictly increasing
    std::vector<complexd> s21;
    double flux = 0.0;            // Phi/Phi_Q
    std::string model_id;
    std::uint64_t seed = 0;
    double noise_level = 0.0;     // std dev per quadrature
};

/// Effective linear weak link (renormalized inductance).
struct LinearWeakLink {
    double lj_star = 0.0; // H, may be +infinity
};

/// Weak link backed by a retarded self-energy sampled on a grid; linear
/// interpolation in |omega|. dissipative_zero restores the loss removed by
/// the counter-term subtraction (zero-temperature runs).
struct SigmaWeakLink {
    selfenergy::FrequencyGrid grid;
    std::vector<complexd> sigma;
    double dissipative_zero = 0.0;

    complexd sample(double omega) const;
};

using WeakLinkModel = std::variant<LinearWeakLink, SigmaWeakLink>;

struct SynthOptions {
    double noise_level = 0.0;    // complex Gaussian, per quadrature
    std::uint64_t seed = 0;
    double loss_floor = 1e-4;    // per-junction series resistance, units of Z_c
};

/// Sample S21 over [f_lo, f_hi] (Hz) with n points; frequencies landing on a
/// network pole are nudged by one part in 1e9.
Trace synth_trace(const DeviceParams& device, const WeakLinkModel& model, double flux_frac,
                  double f_lo, double f_hi, std::size_t n_points,
                  const SynthOptions& opts = {});

struct Window {
    double f_lo = 0.0, f_hi = 0.0; // Hz
    double f_min = 0.0;            // location of the dip
    double depth = 0.0;            // baseline - |S21|min
    double width_est = 0.0;        // half-depth full width, Hz
};

struct FindOptions {
    double prominence = 0.05;      // dip depth below baseline, |S21| units
    double window_linewidths = 10.0;
    double window_fsr_cap = 1.0 / 3.0;
};

/// Dips of |S21| below the baseline by at least the prominence, each with a
/// fitting window of +-window_linewidths estimated linewidths capped at a
/// third of the observed spacing.
std::vector<Window> find_resonances(const Trace& trace, const FindOptions& opts = {});

/// Hanging-resonator fit result.
struct ResonanceFit {
    double f0 = 0.0;        // Hz
    double q_internal = 0.0;
    double q_external = 0.0;
    double asymmetry = 0.0; // X, Ohm
    double residual_rms = 0.0;
    std::vector<double> covariance; // 4x4 row-major over (f0, Qi, Qe, X)
    int iterations = 0;
    bool converged = false;

    double gamma_int() const { return f0 / q_internal; } // Hz
};

struct FitOptions {
    double z_tl = 50.0;
    int restarts = 3;        // jittered re-initializations
    std::uint64_t seed = 2;  // deterministic jitter
    double residual_threshold = 0.2; // flag fits worse than this rms
};

/// Complex least squares of the asymmetric hanging-resonator line shape
/// S21 = (1 - iX/Z_tl)(1 - 2iQi d)/(1 + (Qi/Qe)(1 - iX/Z_tl) - 2iQi d),
/// d = (f - f0)/f0, over the window.
ResonanceFit fit_lineshape(const Trace& trace, const Window& window,
                           const std::optional<ResonanceFit>& initial = std::nullopt,
                           const FitOptions& opts = {});

/// Model line shape, exposed for synthesis and tests.
complexd lineshape_s21(double f, double f0, double q_i, double q_e, double x_asym,
                       double z_tl = 50.0);

/// One row of the per-mode summary table.
struct ModeRow {
    double flux = 0.0;
    int index = -1;              // mode number l (when known)
    double f = 0.0;              // Hz
    double fsr = 0.0;            // Hz, from adjacent reference modes
    double delta_theta = 0.0;    // rad
    double gamma_int = 0.0;      // Hz
    double gamma_diel = 0.0;     // Hz
    double gamma_j = 0.0;        // Hz
    double q_internal = 0.0, q_external = 0.0, asymmetry = 0.0, residual_rms = 0.0;
    bool fit_converged = false;
    bool flagged = false;        // matching ambiguity or negative gamma_j
};
using ModeTable = std::vector<ModeRow>;

/// Fit every found resonance of a trace.
ModeTable fit_trace(const Trace& trace, const FindOptions& fopts = {},
                    const FitOptions& opts = {});

/// Relative phase shift per mode from two mode tables (at flux and at half
/// flux): delta_theta_l = pi (f_ref - f)/fsr_l, mode matched to the nearest
/// reference at or above its frequency. Shifts beyond half a spacing are
/// flagged.
ModeTable extract_phase_shift(const ModeTable& at_flux, const ModeTable& at_half);

/// gamma_J = gamma_int - gamma_diel(f) from a calibrated dielectric model.
ModeTable gamma_decomposition(const ModeTable& table, const losses::DielectricModel& model);

/// Fit tan-delta model coefficients from reference (f, gamma_int) pairs:
/// log-log linear regression of gamma = (w/2pi) x^2 A w^b.
losses::DielectricModel calibrate_dielectric(const std::vector<double>& freq_hz,
                                             const std::vector<double>& gamma_int_hz,
                                             const ArrayParams& array);

struct DispersionFit {
    double inductance = 0.0;          // H
    double ground_capacitance = 0.0;  // F
    double omega_p = 0.0;             // rad/s
    double z_c = 0.0;                 // Ohm
    double rel_err_l = 0.0, rel_err_cg = 0.0; // 1-sigma relative
    bool degenerate = false;          // band does not constrain w_p
    bool converged = false;
};

/// Least-squares fit of the array dispersion to a list of (l, f_l) modes with
/// wavevectors k_l = pi (l+1/2)/(N+1/2) and the junction capacitance fixed.
DispersionFit fit_dispersion(const std::vector<int>& mode_index,
                             const std::vector<double>& freq_hz, double junction_capacitance,
                             std::size_t n_junctions);

} // namespace bsg::spectroscopy
