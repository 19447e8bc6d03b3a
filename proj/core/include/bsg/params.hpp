#pragma once

#include <cmath>
#include <cstddef>

#include "bsg/constants.hpp"
#include "bsg/errors.hpp"

namespace bsg {

/// Josephson junction array: N identical junctions (inductance L shunted by
/// capacitance C) separating N+1 islands, each island grounded through C_g.
struct ArrayParams {
    std::size_t n_junctions = 0; // N
    double inductance = 0.0;          // L, H
    double junction_capacitance = 0.0; // C, F
    double ground_capacitance = 0.0;   // C_g, F

    /// Band edge of the propagating spectrum, 1/sqrt(L(C + C_g/4)).
    double plasma_omega() const {
        return 1.0 / std::sqrt(inductance * (junction_capacitance + 0.25 * ground_capacitance));
    }

    /// Low-frequency characteristic impedance sqrt(L/C_g).
    double char_impedance() const { return std::sqrt(inductance / ground_capacitance); }

    void validate() const {
        if (n_junctions < 1) throw ValidationError("array: n_junctions must be >= 1");
        if (!(inductance > 0.0)) throw ValidationError("array: inductance must be > 0");
        if (!(junction_capacitance > 0.0)) throw ValidationError("array: junction_capacitance must be > 0");
        if (!(ground_capacitance > 0.0)) throw ValidationError("array: ground_capacitance must be > 0");
    }
};

/// Flux-tunable boundary SQUID.
struct SquidParams {
    double ej_zero = 0.0;    // E_J(0), J
    double asymmetry = 0.0;  // d, dimensionless, in [0, 1)
    double capacitance = 0.0; // C_J, F

    /// Charging energy (2e)^2 / C_J.
    double charging_energy(const Constants& c) const {
        const double two_e = 2.0 * c.electron_charge;
        return two_e * two_e / capacitance;
    }

    void validate() const {
        if (!(ej_zero > 0.0)) throw ValidationError("squid: ej_zero must be > 0");
        if (asymmetry < 0.0 || asymmetry >= 1.0) throw ValidationError("squid: asymmetry must be in [0, 1)");
        if (!(capacitance > 0.0)) throw ValidationError("squid: capacitance must be > 0");
    }
};

/// Full device: array terminated by the SQUID at island 0, feed line
/// galvanically T-coupled at island N.
struct DeviceParams {
    ArrayParams array;
    SquidParams squid;
    double feedline_impedance = 50.0; // Z_tl, Ohm
    double feedline_reactance = 0.0;  // X, Ohm; smooth contact reactance, 0 by default
    Constants constants;

    void validate() const {
        array.validate();
        squid.validate();
        if (!(feedline_impedance > 0.0)) throw ValidationError("device: feedline_impedance must be > 0");
        if (!std::isfinite(feedline_reactance)) throw ValidationError("device: feedline_reactance must be finite");
    }
};

} // namespace bsg
