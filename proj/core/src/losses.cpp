#include "bsg/losses.hpp"

#include <cmath>
#include <limits>

#include "bsg/circuit.hpp"
#include "bsg/errors.hpp"

namespace bsg::losses {

DielectricModel DielectricModel::from_array(const ArrayParams& array, double amplitude,
                                            double exponent) {
    DielectricModel m;
    m.amplitude = amplitude;
    m.exponent = exponent;
    m.screening_length = std::sqrt(array.junction_capacitance / array.ground_capacitance);
    m.phase_velocity = 1.0 / std::sqrt(array.inductance * array.ground_capacitance);
    return m;
}

GammaDiel gamma_diel(const DielectricModel& model, double omega) {
    if (!(omega > 0.0)) throw ValidationError("gamma_diel: omega must be > 0");
    const double x = omega * model.screening_length / model.phase_velocity;
    const double td = model.tan_delta(omega);
    GammaDiel out;
    out.gamma = omega / (2.0 * M_PI) * x * x * td;
    const double x2 = x * x;
    if (x2 < 1.0) {
        out.kappa_prime = (x / model.screening_length) / std::sqrt(1.0 - x2);
        out.kappa_double =
            0.5 * td * (x / model.screening_length) * x2 / std::pow(1.0 - x2, 1.5);
        out.q_int = out.kappa_prime / (2.0 * out.kappa_double);
    }
    out.valid = x2 < 0.1 && td < 0.1;
    return out;
}

double r_junction(const JunctionLossModel& model, double omega) {
    if (!(omega > 0.0)) throw ValidationError("r_junction: omega must be > 0");
    const Constants c;
    switch (model.kind) {
        case JunctionLossModel::Kind::dielectric:
            if (model.tan_delta <= 0.0) return std::numeric_limits<double>::infinity();
            return 1.0 / (omega * model.cj * model.tan_delta);
        case JunctionLossModel::Kind::quasiparticle:
            if (model.x_qp <= 0.0) return std::numeric_limits<double>::infinity();
            return M_PI * omega * model.lj_star / model.x_qp *
                   std::sqrt(2.0 * model.gap / (c.reduced_planck * omega));
    }
    return std::numeric_limits<double>::infinity();
}

complexd y_j_star(const JunctionLossModel& model, double omega) {
    const double wj = 1.0 / std::sqrt(model.lj_star * model.cj);
    const double reactive = (1.0 - (omega / wj) * (omega / wj)) / (omega * model.lj_star);
    return complexd{1.0 / r_junction(model, omega), reactive};
}

double gamma_boundary(const DeviceParams& device, complexd y, double omega) {
    const auto& a = device.array;
    const double w2lc = omega * omega * a.inductance * a.junction_capacitance;
    if (w2lc >= 1.0) throw ValidationError("gamma_boundary: omega above 1/sqrt(LC)");
    const double z_tilde = a.char_impedance() / std::sqrt(1.0 - w2lc);
    const complexd num = 1.0 + z_tilde * y;
    const complexd den = 1.0 - z_tilde * y;
    if (std::abs(den) < 1e-14 * std::abs(num)) {
        throw PoleError("gamma_boundary: boundary admittance pole", omega);
    }
    const double fsr = circuit::fsr_at(a, omega);
    return fsr / M_PI * std::log(std::abs(num / den));
}

namespace {

/// |dtheta/dL_J*| from the exact derivative of the phase-shift relation
/// cot(theta) = q [1 - p L_J*/(1 - w^2 L_J* C_J)], p = (2/L)(1 - w^2 L C):
/// dtheta/dL_J* = q p / [(1 - w^2 L_J* C_J)^2 + q^2 ((1 - w^2 L_J* C_J) - p L_J*)^2].
double dtheta_dlj(const DeviceParams& device, double lj_star, double omega) {
    const auto& a = device.array;
    const double wp = a.plasma_omega();
    const double w2lc = omega * omega * a.inductance * a.junction_capacitance;
    const double p = 2.0 / a.inductance * (1.0 - w2lc);
    const double q = 0.5 * omega * std::sqrt(a.inductance * a.ground_capacitance) /
                     std::sqrt(1.0 - (omega / wp) * (omega / wp));
    const double det = 1.0 - omega * omega * lj_star * device.squid.capacitance;
    const double denom = det * det + q * q * (det - p * lj_star) * (det - p * lj_star);
    return std::abs(q * p / denom);
}

} // namespace

double flux_noise_broadening(const DeviceParams& device, const scha::SchaSolution& sol,
                             double flux_frac, double omega_l, const FluxNoiseModel& noise,
                             const FluxNoiseOptions& opts) {
    if (noise.amplitude == 0.0) return 0.0;
    const Constants& c = device.constants;

    // The band integral of the 1/f spectrum collapses to delta Phi ~ A_Phi.
    const double delta_phi = noise.amplitude;
    double delta_ej = device.squid.ej_zero * M_PI * std::abs(std::sin(M_PI * flux_frac)) *
                      delta_phi / c.flux_quantum();
    if (opts.scaling_correction && opts.alpha > 0.0 && opts.alpha < 1.0) {
        delta_ej *= (sol.ej_star / circuit::ej_of_flux(device.squid, flux_frac)) /
                    (1.0 - opts.alpha);
    }

    // dtheta/dE* = dtheta/dL* times L*/E*.
    const double dtheta =
        dtheta_dlj(device, sol.lj_star, omega_l) * sol.lj_star / sol.ej_star * delta_ej;
    const double fsr = circuit::fsr_at(device.array, omega_l);
    return fsr / M_PI * dtheta;
}

} // namespace bsg::losses
