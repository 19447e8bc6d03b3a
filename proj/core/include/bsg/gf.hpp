#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "bsg/errors.hpp"
#include "bsg/params.hpp"

namespace bsg::selfenergy {

using complexd = std::complex<double>;

/// Symmetric uniform angular-frequency grid, w_j = (j - n/2) dw, j = 0..n-1,
/// with n a power of two. This is the carrier for every gridded spectrum.
struct FrequencyGrid {
    std::size_t n_points = 0;
    double omega_max = 0.0; // rad/s; grid spans [-omega_max, omega_max - dw]

    FrequencyGrid() = default;
    FrequencyGrid(std::size_t n, double wmax) : n_points(n), omega_max(wmax) {
        if (n < 8 || (n & (n - 1)) != 0) {
            throw ValidationError("FrequencyGrid: n_points must be a power of two >= 8");
        }
        if (!(wmax > 0.0)) throw ValidationError("FrequencyGrid: omega_max must be > 0");
    }

    double spacing() const { return 2.0 * omega_max / static_cast<double>(n_points); }
    double omega(std::size_t j) const {
        return (static_cast<double>(j) - 0.5 * static_cast<double>(n_points)) * spacing();
    }
    std::size_t zero_index() const { return n_points / 2; }
    double time_step() const { return 2.0 * M_PI / (spacing() * static_cast<double>(n_points)); }
    double time(std::size_t m) const {
        return (static_cast<double>(m) - 0.5 * static_cast<double>(n_points)) * time_step();
    }

    /// Grid-resolution contract for device spectra: the spacing resolves the
    /// free spectral range and the span holds three-photon convolutions.
    void validate_for(const DeviceParams& device, double mode_width) const;

    bool operator==(const FrequencyGrid& other) const = default;
};

/// Zero-temperature time-ordered phase-phase Green's function on a grid.
/// Values carry units of seconds; G(-w) = G(w).
struct TimeOrderedGF {
    FrequencyGrid grid;
    std::vector<complexd> values;
};

/// Equilibrium contour-ordered Green's function: per-frequency 2x2 matrix with
/// components (++, +-, -+, --), plus the temperature that fixes the
/// fluctuation-dissipation relation.
struct KeldyshGF {
    FrequencyGrid grid;
    double temperature = 0.0; // K
    std::vector<complexd> pp, pm, mp, mm;

    /// Rotate to (Keldysh, retarded, advanced).
    std::vector<complexd> retarded() const;
    std::vector<complexd> advanced() const;
    std::vector<complexd> keldysh() const;
};

/// Contour components of the weak-link self-energy (units of J).
struct KeldyshSigma {
    FrequencyGrid grid;
    std::vector<complexd> pp, pm, mp, mm;
};

/// Weak-link self-energy on a grid (units of J). For finite-temperature runs
/// sigma holds the retarded component; for zero-temperature time-ordered runs
/// it holds the (even) time-ordered function, which equals the retarded one at
/// w > 0.
struct SelfEnergy {
    enum class Order { second };

    FrequencyGrid grid;
    std::vector<complexd> sigma;    // regularized, Sigma_reg(0) = e_cutoff
    complexd vertex_energy = 0.0;   // E_J^v, J
    complexd sigma_infinity = 0.0;  // constant part E_J^v + tadpole, J
    double e_cutoff = 0.0;          // J
    // Im Sigma(0) removed by the counter-term subtraction (zero-temperature
    // path only; the loss floor makes it slightly negative). Add it back,
    // sigma + i*dissipative_zero, to recover the passive dissipative part.
    double dissipative_zero = 0.0;  // J
    Order order = Order::second;
    bool converged = false;
    int iterations = 0;
};

/// Basis rotation of App-style contour components to the retarded function:
/// X^R = (X_pp + X_pm - X_mp - X_mm) / 2.
std::vector<complexd> rotate_retarded(const std::vector<complexd>& pp,
                                      const std::vector<complexd>& pm,
                                      const std::vector<complexd>& mp,
                                      const std::vector<complexd>& mm);

inline std::vector<complexd> retarded_from_keldysh(const KeldyshGF& g) { return g.retarded(); }
inline std::vector<complexd> sigma_retarded(const KeldyshSigma& s) {
    return rotate_retarded(s.pp, s.pm, s.mp, s.mm);
}

} // namespace bsg::selfenergy
