#include "bsg/circuit.hpp"

#include <cmath>
#include <limits>

#include "bsg/errors.hpp"

namespace bsg::circuit {

namespace {

constexpr complexd kImag{0.0, 1.0};

void require_positive_omega(double omega) {
    if (!(omega > 0.0)) throw ValidationError("omega must be > 0");
}

/// Series element of one cell (junction inductor with optional series
/// resistance, shunted by the junction capacitance), conjugate convention.
complexd series_cell_impedance(const ArrayParams& a, double omega, double r) {
    const double w2lc = omega * omega * a.inductance * a.junction_capacitance;
    const complexd num{r, -omega * a.inductance};
    const complexd den{1.0 - w2lc, -omega * r * a.junction_capacitance};
    return num / den;
}

} // namespace

double ej_of_flux(const SquidParams& squid, double flux_frac) {
    const double c = std::cos(M_PI * flux_frac);
    const double s = std::sin(M_PI * flux_frac);
    return squid.ej_zero * std::sqrt(c * c + squid.asymmetry * squid.asymmetry * s * s);
}

double dispersion_omega(const ArrayParams& array, double k) {
    if (!(k > 0.0) || k > M_PI) throw ValidationError("dispersion_omega: k must be in (0, pi]");
    const double s = std::sin(0.5 * k);
    const double d = array.inductance *
                     (array.junction_capacitance * s * s + 0.25 * array.ground_capacitance);
    return s / std::sqrt(d);
}

double dispersion_domega_dk(const ArrayParams& array, double k) {
    if (!(k > 0.0) || k > M_PI) throw ValidationError("dispersion_domega_dk: k must be in (0, pi]");
    const double s = std::sin(0.5 * k);
    const double d = array.inductance *
                     (array.junction_capacitance * s * s + 0.25 * array.ground_capacitance);
    return std::cos(0.5 * k) * array.inductance * array.ground_capacitance /
           (8.0 * d * std::sqrt(d));
}

complexd dispersion_k(const ArrayParams& array, double omega, double series_resistance) {
    require_positive_omega(omega);
    const double wp = array.plasma_omega();
    if (series_resistance == 0.0 && std::abs(omega - wp) <= 1e-12 * wp) {
        throw PoleError("dispersion_k: pole at the plasma frequency", omega, wp);
    }
    // sin^2(k/2) = -z y / 4 with y = -i w C_g.
    const complexd z = series_cell_impedance(array, omega, series_resistance);
    const complexd y{0.0, -omega * array.ground_capacitance};
    const complexd s2 = -0.25 * z * y;
    complexd k = 2.0 * std::asin(std::sqrt(s2));
    // The impedance formulas are even in k; pick the decaying branch.
    if (k.imag() < 0.0) k = -k;
    return k;
}

TwoPortImpedance impedance_matrix(const ArrayParams& array, double omega,
                                  double series_resistance) {
    require_positive_omega(omega);
    const complexd k = dispersion_k(array, omega, series_resistance);
    const complexd z = series_cell_impedance(array, omega, series_resistance);
    const std::size_t n = array.n_junctions;
    const double p = static_cast<double>(n) + 1.0; // N+1

    // cos((N+1/2)k)/sin((N+1)k) and cos(k/2)/sin((N+1)k), written with
    // exponentials of non-negative decay only so arbitrarily large N and
    // evanescent k cannot overflow.
    const complexd e_half = std::exp(kImag * (0.5 * k));
    const complexd e_p = std::exp(kImag * (p * k));
    const complexd e_2n1 = std::exp(kImag * ((2.0 * p - 1.0) * k));
    const complexd denom = e_p * e_p - 1.0;

    const double decay = p * k.imag();
    const double sin_p_mag =
        0.5 * std::abs(denom) * std::exp(std::min(decay, 700.0));
    if (sin_p_mag < 1e-12) {
        const double m = std::round(k.real() * p / M_PI);
        double nearest = 0.0;
        if (m >= 1.0 && m <= p - 1.0) {
            nearest = dispersion_omega(array, m * M_PI / p);
        }
        throw PoleError("impedance_matrix: frequency at an array resonance", omega, nearest);
    }

    const complexd ratio_diag = kImag * e_half * (1.0 + e_2n1) / denom;
    const complexd ratio_off = 2.0 * kImag * std::cos(0.5 * k) * e_p / denom;
    const complexd pref = -z / (2.0 * std::sin(0.5 * k));
    return {pref * ratio_diag, pref * ratio_off};
}

complexd z_infinity(const ArrayParams& array, double omega) {
    require_positive_omega(omega);
    const double w2lc = omega * omega * array.inductance * array.junction_capacitance;
    if (std::abs(1.0 - w2lc) < 1e-12) {
        throw PoleError("z_infinity: pole at 1/sqrt(LC)", omega,
                        1.0 / std::sqrt(array.inductance * array.junction_capacitance));
    }
    const double wp = array.plasma_omega();
    const complexd root = std::sqrt(complexd{1.0 - (omega / wp) * (omega / wp), 0.0});
    return (array.char_impedance() * root - kImag * 0.5 * omega * array.inductance) /
           (1.0 - w2lc);
}

complexd z_env(const DeviceParams& device, double omega, double series_resistance) {
    const auto zm = impedance_matrix(device.array, omega, series_resistance);
    const complexd w = 0.5 * complexd{device.feedline_impedance, -device.feedline_reactance};
    return zm.z_a - zm.z_ab * zm.z_ab / (w + zm.z_a);
}

complexd z_weak_linear(const SquidParams& squid, double lj_star, double omega) {
    require_positive_omega(omega);
    complexd y{0.0, -omega * squid.capacitance};
    if (std::isfinite(lj_star)) {
        if (!(lj_star > 0.0)) throw ValidationError("z_weak_linear: lj_star must be > 0");
        y += kImag / (omega * lj_star);
        if (squid.capacitance > 0.0) {
            const double det = 1.0 - omega * omega * lj_star * squid.capacitance;
            if (std::abs(det) < 1e-12) {
                throw PoleError("z_weak_linear: pole at the SQUID resonance", omega,
                                1.0 / std::sqrt(lj_star * squid.capacitance));
            }
        }
    } else if (squid.capacitance == 0.0) {
        throw ValidationError("z_weak_linear: open inductor with zero capacitance has no impedance");
    }
    return 1.0 / y;
}

complexd z_aw(const DeviceParams& device, complexd z_w, double omega,
              double series_resistance) {
    const auto zm = impedance_matrix(device.array, omega, series_resistance);
    if (std::isinf(z_w.real()) || std::isinf(z_w.imag())) return zm.z_a;
    return zm.z_a - zm.z_ab * zm.z_ab / (z_w + zm.z_a);
}

complexd s21(const DeviceParams& device, complexd z_w, double omega,
             double series_resistance) {
    const complexd zaw = z_aw(device, z_w, omega, series_resistance);
    const complexd w = 0.5 * complexd{device.feedline_impedance, -device.feedline_reactance};
    const complexd z_node = 1.0 / (1.0 / w + 1.0 / zaw);
    return 2.0 * z_node / device.feedline_impedance;
}

double fsr_linear(const ArrayParams& array) {
    const double n_eff = static_cast<double>(array.n_junctions) + 0.5;
    return 1.0 / (2.0 * n_eff * std::sqrt(array.inductance * array.ground_capacitance));
}

double fsr_at(const ArrayParams& array, double omega) {
    const complexd kc = dispersion_k(array, omega);
    if (std::abs(kc.imag()) > 1e-9) {
        throw ValidationError("fsr_at: omega above the propagating band");
    }
    const double n_eff = static_cast<double>(array.n_junctions) + 0.5;
    return dispersion_domega_dk(array, kc.real()) / (2.0 * n_eff);
}

} // namespace bsg::circuit
