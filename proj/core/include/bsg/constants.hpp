#pragma once

#include <cmath>

namespace bsg {

/// Physical constants used throughout. Values are SI (2019 redefinition).
/// Kept as data rather than hard-coded so tests can perturb them.
struct Constants {
    double reduced_planck = 1.054571817e-34;  // J s
    double electron_charge = 1.602176634e-19; // C
    double boltzmann = 1.380649e-23;          // J/K

    double planck() const { return 2.0 * M_PI * reduced_planck; }

    /// Superconducting resistance quantum h/(2e)^2, about 6.45 kOhm.
    double resistance_quantum() const {
        const double two_e = 2.0 * electron_charge;
        return planck() / (two_e * two_e);
    }

    /// Flux quantum h/(2e).
    double flux_quantum() const { return planck() / (2.0 * electron_charge); }

    /// (hbar/2e)^2, converts a Josephson energy to an inductance: L = phi0_sq / E_J.
    double reduced_flux_quantum_sq() const {
        const double phi0 = reduced_planck / (2.0 * electron_charge);
        return phi0 * phi0;
    }
};

} // namespace bsg
