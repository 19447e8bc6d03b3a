#pragma once

#include <complex>
#include <vector>

#include "bsg/params.hpp"

namespace bsg::testing {

using complexd = std::complex<double>;

/// Brute-force nodal analysis of the ladder: assemble the full (N+1)x(N+1)
/// admittance matrix from element admittances and invert it. Independent of
/// the closed-form impedance path.
struct NodalResult {
    complexd z_a;  // Z(0,0)
    complexd z_ab; // Z(0,N)
};
NodalResult nodal_impedance_matrix(const ArrayParams& array, double omega,
                                   double series_resistance = 0.0);

/// Nodal Z(0,0) with an extra shunt (the feed line) at island N; reproduces
/// Z_env by brute force.
complexd nodal_z_env(const DeviceParams& device, double omega, double series_resistance = 0.0);

/// <phi_0^2> of the linearized circuit (weak link as an L_J* inductor) by
/// exact normal-mode diagonalization of the quadratic Hamiltonian with an
/// open feed line. Independent of the impedance-integral path.
double phi2_normal_modes(const DeviceParams& device, double lj_star);

/// Spectrum of the boundary phase correlator for a small multimode Hamiltonian
///   H = sum_i w_i a_i^+ a_i + (E_J/2) phi^2 - (E_J/24) phi^4,
///   phi = sum_i g_i (a_i + a_i^+),
/// by dense diagonalization in a truncated Fock space. Returns poles
/// (excitation energies from the ground state, rad/s) and weights
/// |<n|phi|0>|^2 above the given weight floor.
struct PhiSpectralLine {
    double omega;
    double weight;
};
std::vector<PhiSpectralLine> phi_spectrum_ed(const std::vector<double>& mode_omegas,
                                             const std::vector<double>& couplings,
                                             double ej_over_hbar, int n_max,
                                             double weight_floor = 1e-10);

} // namespace bsg::testing
