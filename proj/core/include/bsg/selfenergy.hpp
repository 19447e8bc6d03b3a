#pragma once

#include <functional>
#include <optional>
#include <variant>

#include "bsg/gf.hpp"
#include "bsg/params.hpp"

namespace bsg::selfenergy {

/// Options of the self-consistent Born solve.
struct DysonOptions {
    double tol = 1e-6;          // on max|dG|/max|G|
    int max_iter = 200;
    double mixing = 0.3;        // linear mixing on G, halved when oscillating
    double e_cutoff = 0.0;      // J; 0 selects the default rule 0.05 E_J(Phi_Q/2)
    double loss_floor = 1e-4;   // per-junction series resistance, units of Z_c
    double window_fraction = 0.05; // cosine roll-off applied to G(w) before kernels
    bool cubic_kernel_only = false; // truncate sin/cos kernels at the G^3/G^4 term
    double fdt_abort = 1e-6;    // Keldysh consistency threshold
};

struct DysonDiagnostics {
    double residual = 0.0;       // final max|dG|/max|G|
    double fdt_residual = 0.0;   // max |G^K - (G^R - G^A) coth| / max |G^K|
    // Keldysh-component consistency of the kernel transforms,
    // |Im Sigma^R - Im (Sigma^> - Sigma^<)/2| relative to the band maximum.
    // Discretization-limited; shrinks with the grid span.
    double sigma_kms_residual = 0.0;
    double phi_sq = 0.0;         // i G(t=0) at the solution
    double e_cutoff = 0.0;       // J, as used
    std::vector<double> residual_history;
};

struct DysonResult {
    std::variant<TimeOrderedGF, KeldyshGF> gf;
    SelfEnergy sigma;          // regularized; retarded for Keldysh runs
    DysonDiagnostics diagnostics;
    bool converged = false;
};

/// Free (E_J = 0) time-ordered Green's function on the grid,
/// G0(w) = (2 pi / (i|w| R_Q)) Z0(|w|), Z0 = [1/Z_env + |w| C_J / i]^{-1}.
/// loss_floor (units of Z_c) broadens the array modes so they are resolvable;
/// throws when the grid cannot resolve them.
TimeOrderedGF g0_timeordered(const DeviceParams& device, const FrequencyGrid& grid,
                             double loss_floor = 1e-4);

/// Debye-Waller vertex E_J^v = E_J exp(-i G(t=0)/2). Throws AccuracyError when
/// the equal-time fluctuation is so large that the vertex underflows, which is
/// the signature of an unregularized (infrared-divergent) propagator.
complexd vertex_energy(double ej, complexd g_equal_time);

/// Second-order skeleton self-energy from a time-domain propagator (already
/// transformed; index m corresponds to grid.time(m)). Unregularized.
SelfEnergy sigma_second_order(double ej, const std::vector<complexd>& g_time,
                              const FrequencyGrid& grid, bool cubic_kernel_only = false);

/// Counter-term regularization: Sigma_reg(w) = Sigma(w) - Sigma(0) + e_cutoff.
SelfEnergy regularize(const SelfEnergy& sigma, double e_cutoff);

/// Default infrared counter-term, 0.05 E_J(Phi_Q/2).
double default_e_cutoff(const DeviceParams& device);

/// Self-consistent Born solve for the device at the given flux. temperature = 0
/// runs the time-ordered path; temperature > 0 the equilibrium Keldysh path.
DysonResult dyson_solve(const DeviceParams& device, double flux_frac, double temperature,
                        const FrequencyGrid& grid, const DysonOptions& opts = {});

/// Same solver against a caller-supplied inverse retarded free propagator
/// (units 1/s), for toy environments. ej in J.
DysonResult dyson_solve_custom(const std::function<complexd(double)>& inv_g0_retarded,
                               double ej, double temperature, const FrequencyGrid& grid,
                               const DysonOptions& opts);

/// Weak-link impedance from a retarded self-energy sample (units J) at omega:
/// Z_w = [w C_J / i + 2 pi i Sigma / (R_Q hbar w)]^{-1}.
complexd z_w_from_sigma(const SquidParams& squid, const Constants& constants,
                        complexd sigma_r, double omega);

/// Retarded function from a zero-temperature time-ordered one: equal at w >= 0,
/// conjugate-mirrored at w < 0.
std::vector<complexd> retarded_from_timeordered(const std::vector<complexd>& values,
                                                const FrequencyGrid& grid);

struct ScalingCheck {
    double slope = 0.0;          // fitted d log|Im Sigma| / d log w
    double slope_stderr = 0.0;
    double power_rss = 0.0;      // residual sum of squares, power-law model
    double exponential_rss = 0.0; // same, exponential model, fitted high band
    double window_lo = 0.0, window_hi = 0.0; // rad/s (units of E*/hbar)
};

/// Power-law diagnostic against an idealized ohmic environment
/// G0(w) = 1/(i|w|/(2 pi alpha) - E*/hbar) with a smooth ultraviolet cutoff
/// at w_c = cutoff_ratio * E*/hbar: single-shot second-order Im Sigma, fitted
/// log-log over the middle decade. Expect slope 2 alpha - 1 only at very
/// large cutoff_ratio; near realistic ratios an exponential roll-off wins.
ScalingCheck scaling_exponent_check(double alpha, double cutoff_ratio,
                                    std::size_t n_points = 1 << 20);

struct ValidityReport {
    double ratio = 0.0; // E_J*(flux) / (hbar w_min)
    bool valid = false;
};

/// Perturbative-regime flag: the expansion is controlled when the renormalized
/// scale is far below the measurement band.
ValidityReport perturbative_validity(const DeviceParams& device, double flux_frac,
                                     double ej_star, double omega_min,
                                     double threshold = 0.2);

} // namespace bsg::selfenergy
