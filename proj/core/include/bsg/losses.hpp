#pragma once

#include <complex>

#include "bsg/params.hpp"
#include "bsg/scha.hpp"

namespace bsg::losses {

using complexd = std::complex<double>;

/// Dielectric loss of the chain junction capacitors, tan-delta = A w^b.
struct DielectricModel {
    double amplitude = 0.0;        // A, (rad/s)^-b
    double exponent = 0.0;         // b
    double screening_length = 0.0; // l_c, sites
    double phase_velocity = 0.0;   // v_phi, sites rad/s

    double tan_delta(double omega) const { return amplitude * std::pow(omega, exponent); }

    /// l_c = sqrt(C/C_g), v_phi = 1/sqrt(L C_g); then x = w l_c/v_phi = w sqrt(LC).
    static DielectricModel from_array(const ArrayParams& array, double amplitude,
                                      double exponent);
};

struct GammaDiel {
    double gamma = 0.0;        // Hz
    double kappa_prime = 0.0;  // 1/site
    double kappa_double = 0.0; // 1/site
    double q_int = 0.0;        // kappa'/(2 kappa'')
    bool valid = true;         // TEM regime x << 1 and tan-delta << 1
};

/// Chain dielectric damping gamma = (w/2pi) x^2 tan-delta, with the complex
/// wavenumber components exposed. Results outside the validity regime are
/// flagged, not thrown.
GammaDiel gamma_diel(const DielectricModel& model, double omega);

/// Boundary-junction loss models: a resistance across the SQUID capacitance
/// (dielectric) or across its inductance (quasiparticles).
struct JunctionLossModel {
    enum class Kind { dielectric, quasiparticle };
    Kind kind = Kind::dielectric;
    double tan_delta = 0.0; // dielectric variant
    double x_qp = 0.0;      // quasiparticle density over Cooper-pair density
    double gap = 0.0;       // superconducting gap, J
    double lj_star = 0.0;   // H
    double cj = 0.0;        // F
};

/// Loss resistance of the chosen variant:
/// dielectric R = 1/(w C_J tan-delta); quasiparticle R = pi w L_J*/x_qp sqrt(2 gap/(hbar w)).
double r_junction(const JunctionLossModel& model, double omega);

/// Full RLC admittance of the lossy boundary,
/// Y = (i/(w L_J*)) [1 - (w/w_J*)^2] + 1/R(w).
complexd y_j_star(const JunctionLossModel& model, double omega);

/// Round-trip damping from the boundary reflection deficit,
/// gamma = (fsr(w)/pi) ln |(1 + Z~_c Y)/(1 - Z~_c Y)|, Z~_c = Z_c/sqrt(1-LCw^2).
double gamma_boundary(const DeviceParams& device, complexd y, double omega);

/// 1/f flux noise through the SQUID.
struct FluxNoiseModel {
    double amplitude = 0.0; // A_Phi, Wb
    double exponent = 1.0;  // beta (fixed to 1 in the broadening estimate)
    double f_lo = 1.0;      // Hz, integration band
    double f_hi = 1e9;      // Hz
};

struct FluxNoiseOptions {
    // delta E_J* = delta E_J by default; optionally scaled by the power-law
    // exponent d ln E*/d ln E = 1/(1-alpha).
    bool scaling_correction = false;
    double alpha = 0.0;
};

/// Inhomogeneous mode broadening delta f_l = (fsr_l/pi) |dtheta/dE_J*| dE_J*
/// with dE_J* from the flux noise amplitude (the band integral of the 1/f
/// spectrum collapses to delta Phi ~ A_Phi).
double flux_noise_broadening(const DeviceParams& device, const scha::SchaSolution& sol,
                             double flux_frac, double omega_l, const FluxNoiseModel& noise,
                             const FluxNoiseOptions& opts = {});

} // namespace bsg::losses
