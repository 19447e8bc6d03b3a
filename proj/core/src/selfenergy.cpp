#include "bsg/selfenergy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bsg/circuit.hpp"
#include "bsg/fft.hpp"
#include "bsg/scha.hpp"

namespace bsg::selfenergy {

namespace {

constexpr complexd kI{0.0, 1.0};

/// G(t_m) = (dw/2pi) sum_j exp(-i w_j t_m) G_j on the centered grid. With n a
/// multiple of four the center shifts reduce to (-1)^j / (-1)^m twiddles.
std::vector<complexd> spectrum_to_time(const std::vector<complexd>& g_omega,
                                       const FrequencyGrid& grid) {
    const std::size_t n = grid.n_points;
    std::vector<complexd> work(n);
    for (std::size_t j = 0; j < n; ++j) {
        work[j] = (j % 2 == 0) ? g_omega[j] : -g_omega[j];
    }
    fft::forward(work);
    const double scale = grid.spacing() / (2.0 * M_PI);
    for (std::size_t m = 0; m < n; ++m) {
        work[m] *= (m % 2 == 0) ? scale : -scale;
    }
    return work;
}

/// K(w_j) = dt sum_m exp(+i w_j t_m) K_m, inverse of spectrum_to_time.
std::vector<complexd> time_to_spectrum(const std::vector<complexd>& k_time,
                                       const FrequencyGrid& grid) {
    const std::size_t n = grid.n_points;
    std::vector<complexd> work(n);
    for (std::size_t m = 0; m < n; ++m) {
        work[m] = (m % 2 == 0) ? k_time[m] : -k_time[m];
    }
    fft::backward(work);
    const double scale = grid.time_step();
    for (std::size_t j = 0; j < n; ++j) {
        work[j] *= (j % 2 == 0) ? scale : -scale;
    }
    return work;
}

complexd equal_time(const std::vector<complexd>& g_omega, const FrequencyGrid& grid) {
    complexd sum = std::accumulate(g_omega.begin(), g_omega.end(), complexd{0.0, 0.0});
    return sum * (grid.spacing() / (2.0 * M_PI));
}

/// Cosine roll-off over the outer window_fraction of the band.
std::vector<double> band_window(const FrequencyGrid& grid, double fraction) {
    const std::size_t n = grid.n_points;
    std::vector<double> w(n, 1.0);
    if (fraction <= 0.0) return w;
    const double edge = (1.0 - fraction) * grid.omega_max;
    for (std::size_t j = 0; j < n; ++j) {
        const double aw = std::abs(grid.omega(j));
        if (aw > edge) {
            const double x = (aw - edge) / (grid.omega_max - edge);
            w[j] = 0.5 * (1.0 + std::cos(M_PI * std::min(x, 1.0)));
        }
    }
    return w;
}

double max_abs(const std::vector<complexd>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

struct EnvSamples {
    std::vector<complexd> inv_g0_retarded; // [G^R0]^{-1}(w_j), units 1/s
};

/// Inverse free retarded propagator from the device impedances,
/// [G^R0]^{-1}(w) = (i w R_Q / 2 pi) (1/Z_env(w) + w C_J / i),
/// with Z_env(-w) = conj Z_env(w).
EnvSamples device_env_samples(const DeviceParams& device, const FrequencyGrid& grid,
                              double loss_floor) {
    const double rq = device.constants.resistance_quantum();
    const double r_series = loss_floor * device.array.char_impedance();
    const std::size_t n = grid.n_points;
    EnvSamples out;
    out.inv_g0_retarded.assign(n, complexd{0.0, 0.0});
    const std::size_t j0 = grid.zero_index();
    for (std::size_t j = j0; j < n; ++j) {
        const double w = grid.omega(j);
        if (w == 0.0) continue;
        complexd y_env;
        try {
            y_env = 1.0 / circuit::z_env(device, w, r_series);
        } catch (const PoleError&) {
            y_env = 1.0 / circuit::z_env(device, w * (1.0 + 1e-9), r_series);
        }
        const complexd y_tot = y_env - kI * w * device.squid.capacitance;
        out.inv_g0_retarded[j] = kI * w * rq / (2.0 * M_PI) * y_tot;
        const std::size_t jm = 2 * j0 - j; // mirror, w_jm = -w_j
        if (jm > 0) out.inv_g0_retarded[jm] = std::conj(out.inv_g0_retarded[j]);
    }
    // j = 0 (w = -omega_max) has no positive partner.
    {
        const double w = grid.omega(0);
        complexd y_env = 1.0 / circuit::z_env(device, -w, r_series);
        const complexd y_tot = std::conj(y_env) - kI * w * device.squid.capacitance;
        out.inv_g0_retarded[0] = kI * w * rq / (2.0 * M_PI) * y_tot;
    }
    return out;
}

double safe_coth(double x) {
    if (x == 0.0) return 0.0; // only hit at T = 0 where coth -> sign
    if (std::abs(x) > 350.0) return x > 0.0 ? 1.0 : -1.0;
    return 1.0 / std::tanh(x);
}

std::vector<double> coth_samples(const FrequencyGrid& grid, double temperature,
                                 const Constants& constants) {
    const std::size_t n = grid.n_points;
    std::vector<double> c(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double w = grid.omega(j);
        if (temperature <= 0.0) {
            c[j] = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
        } else {
            c[j] = safe_coth(constants.reduced_planck * w /
                             (2.0 * constants.boltzmann * temperature));
        }
    }
    return c;
}

struct Kernels {
    std::vector<complexd> s; // sin G - G   (or -G^3/6)
    std::vector<complexd> c; // cos G - 1 + G^2/2  (or +G^4/24)
};

Kernels nonlinear_kernels(const std::vector<complexd>& g_time, bool cubic_only) {
    const std::size_t n = g_time.size();
    Kernels k;
    k.s.resize(n);
    k.c.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        const complexd g = g_time[m];
        if (cubic_only) {
            const complexd g2 = g * g;
            k.s[m] = -g * g2 / 6.0;
            k.c[m] = g2 * g2 / 24.0;
        } else {
            k.s[m] = std::sin(g) - g;
            k.c[m] = std::cos(g) - 1.0 + 0.5 * g * g;
        }
    }
    return k;
}

void check_aliasing(const std::vector<complexd>& sigma_omega, const FrequencyGrid& grid) {
    // Spectral-leakage detector on the dissipative part; the reactive part
    // carries benign dispersive 1/w tails to the edge.
    const std::size_t n = grid.n_points;
    const std::size_t edge = std::max<std::size_t>(4, n / 64);
    double edge_max = 0.0, band_max = 0.0;
    for (std::size_t j = 0; j < edge; ++j) {
        edge_max = std::max(edge_max, std::abs(sigma_omega[j].imag()));
        edge_max = std::max(edge_max, std::abs(sigma_omega[n - 1 - j].imag()));
    }
    for (const auto& v : sigma_omega) band_max = std::max(band_max, std::abs(v.imag()));
    if (band_max > 0.0 && edge_max > 0.1 * band_max) {
        throw AccuracyError("sigma_second_order: spectral weight at the band edge, "
                            "omega_max too small for the multi-photon support",
                            edge_max / band_max);
    }
}

} // namespace

void FrequencyGrid::validate_for(const DeviceParams& device, double mode_width) const {
    const double wp = device.array.plasma_omega();
    if (omega_max < 4.0 * wp) {
        throw ValidationError("FrequencyGrid: omega_max must be >= 4 w_p");
    }
    const double fsr = 2.0 * M_PI * circuit::fsr_linear(device.array);
    if (spacing() > fsr / 20.0) {
        throw ValidationError("FrequencyGrid: spacing must resolve the free spectral range");
    }
    if (mode_width > 0.0 && spacing() > mode_width / 4.0) {
        throw ValidationError("FrequencyGrid: spacing must resolve the broadened mode width");
    }
}

std::vector<complexd> rotate_retarded(const std::vector<complexd>& pp,
                                      const std::vector<complexd>& pm,
                                      const std::vector<complexd>& mp,
                                      const std::vector<complexd>& mm) {
    std::vector<complexd> r(pp.size());
    for (std::size_t j = 0; j < pp.size(); ++j) {
        r[j] = 0.5 * (pp[j] + pm[j] - mp[j] - mm[j]);
    }
    return r;
}

std::vector<complexd> KeldyshGF::retarded() const {
    std::vector<complexd> r(pp.size());
    for (std::size_t j = 0; j < pp.size(); ++j) r[j] = pp[j] - pm[j];
    return r;
}

std::vector<complexd> KeldyshGF::advanced() const {
    std::vector<complexd> a(pp.size());
    for (std::size_t j = 0; j < pp.size(); ++j) a[j] = pp[j] - mp[j];
    return a;
}

std::vector<complexd> KeldyshGF::keldysh() const {
    std::vector<complexd> k(pp.size());
    for (std::size_t j = 0; j < pp.size(); ++j) k[j] = pp[j] + mm[j];
    return k;
}

TimeOrderedGF g0_timeordered(const DeviceParams& device, const FrequencyGrid& grid,
                             double loss_floor) {
    const double width = loss_floor * device.array.char_impedance() /
                         (2.0 * device.array.inductance);
    grid.validate_for(device, width);
    const EnvSamples env = device_env_samples(device, grid, loss_floor);
    TimeOrderedGF g;
    g.grid = grid;
    g.values.resize(grid.n_points);
    const std::size_t j0 = grid.zero_index();
    for (std::size_t j = 0; j < grid.n_points; ++j) {
        // Time-ordered = retarded at |w|, extended evenly.
        const std::size_t ja = j >= j0 ? j : 2 * j0 - j;
        if (ja == j0) continue;
        g.values[j] = 1.0 / env.inv_g0_retarded[ja];
    }
    // The w = 0 sample of a free boundary is infrared divergent; carry the
    // neighbor value so grid symmetry holds and sums over w > 0 are unaffected.
    g.values[j0] = g.values[j0 + 1];
    return g;
}

complexd vertex_energy(double ej, complexd g_equal_time) {
    // The exact equal-time sample is -i <phi^2>: purely imaginary. A residual
    // real part is a grid artifact (the coarsely sampled infrared structure)
    // and is projected out, leaving the real Debye-Waller factor
    // E_J exp(-<phi^2>/2).
    const double phi_sq = -g_equal_time.imag();
    if (phi_sq > 120.0) {
        throw AccuracyError("vertex_energy: Debye-Waller factor underflow; "
                            "equal-time fluctuations look infrared divergent",
                            phi_sq);
    }
    if (std::abs(g_equal_time.real()) > 1e3) {
        throw AccuracyError("vertex_energy: equal-time sample off the physical branch",
                            std::abs(g_equal_time.real()));
    }
    return ej * std::exp(-0.5 * phi_sq);
}

SelfEnergy sigma_second_order(double ej, const std::vector<complexd>& g_time,
                              const FrequencyGrid& grid, bool cubic_kernel_only) {
    if (g_time.size() != grid.n_points) {
        throw ValidationError("sigma_second_order: g_time size mismatch");
    }
    const Constants constants{};
    const double hbar = constants.reduced_planck;
    // Quartic truncation keeps the vertex at its first tadpole order so it
    // matches a phi^4-truncated Hamiltonian.
    const complexd ev = cubic_kernel_only
                            ? ej * (1.0 + 0.5 * g_time[grid.zero_index()].imag())
                            : vertex_energy(ej, g_time[grid.zero_index()]);
    const Kernels k = nonlinear_kernels(g_time, cubic_kernel_only);

    std::vector<complexd> sig = time_to_spectrum(k.s, grid);
    check_aliasing(sig, grid);

    complexd tadpole = std::accumulate(k.c.begin(), k.c.end(), complexd{0.0, 0.0});
    tadpole *= grid.time_step();
    const complexd c0 = ev + kI * ev * ev / hbar * tadpole;

    SelfEnergy out;
    out.grid = grid;
    out.vertex_energy = ev;
    out.sigma_infinity = c0;
    out.sigma.resize(grid.n_points);
    const complexd amp = ev * ev / hbar;
    for (std::size_t j = 0; j < grid.n_points; ++j) {
        out.sigma[j] = c0 + amp * sig[j];
    }
    return out;
}

SelfEnergy regularize(const SelfEnergy& sigma, double e_cutoff) {
    if (!(e_cutoff > 0.0)) throw ValidationError("regularize: e_cutoff must be > 0");
    SelfEnergy out = sigma;
    const complexd s0 = sigma.sigma[sigma.grid.zero_index()];
    for (auto& s : out.sigma) s += e_cutoff - s0;
    out.sigma_infinity += e_cutoff - s0;
    // The subtraction also removes the (loss-floor induced) dissipative value
    // at w = 0, uniformly offsetting Im Sigma; keep it so consumers can
    // reconstruct the passive function.
    out.dissipative_zero = s0.imag();
    out.e_cutoff = e_cutoff;
    return out;
}

double default_e_cutoff(const DeviceParams& device) {
    return 0.05 * circuit::ej_of_flux(device.squid, 0.5);
}

complexd z_w_from_sigma(const SquidParams& squid, const Constants& constants,
                        complexd sigma_r, double omega) {
    if (!(omega > 0.0)) throw ValidationError("z_w_from_sigma: omega must be > 0");
    const complexd y = -kI * omega * squid.capacitance +
                       2.0 * M_PI * kI * sigma_r /
                           (constants.resistance_quantum() * constants.reduced_planck * omega);
    return 1.0 / y;
}

namespace {

struct SolveInputs {
    std::vector<complexd> inv_g0_retarded;
    double ej = 0.0;
    double temperature = 0.0;
    double e_cutoff = 0.0;
    double cj = 0.0; // informational only
};

/// Zero-temperature path: scalar Dyson on the (even) time-ordered function.
DysonResult solve_timeordered(const SolveInputs& in, const FrequencyGrid& grid,
                              const DysonOptions& opts) {
    const Constants constants{};
    const double hbar = constants.reduced_planck;
    const std::size_t n = grid.n_points;
    const std::size_t j0 = grid.zero_index();

    // Even extension of the inverse propagator: invG0_T(w) = invG0_R(|w|).
    std::vector<complexd> inv_g0(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t ja = j >= j0 ? j : 2 * j0 - j;
        inv_g0[j] = (ja == j0) ? complexd{0.0, 0.0} : in.inv_g0_retarded[ja];
    }

    const std::vector<double> win = band_window(grid, opts.window_fraction);
    std::vector<complexd> sigma_reg(n, complexd{in.e_cutoff, 0.0});
    std::vector<complexd> g(n), g_win(n);
    auto dyson = [&](const std::vector<complexd>& sreg, std::vector<complexd>& out) {
        for (std::size_t j = 0; j < n; ++j) out[j] = 1.0 / (inv_g0[j] - sreg[j] / hbar);
    };
    dyson(sigma_reg, g);

    DysonResult result;
    double mixing = opts.mixing;
    double prev_resid = std::numeric_limits<double>::infinity();
    int rises = 0;
    SelfEnergy sig;
    for (int it = 0; it < opts.max_iter; ++it) {
        for (std::size_t j = 0; j < n; ++j) g_win[j] = g[j] * win[j];
        std::vector<complexd> g_time = spectrum_to_time(g_win, grid);
        g_time[j0] = equal_time(g, grid); // vertex sees the unwindowed sum
        sig = sigma_second_order(in.ej, g_time, grid, opts.cubic_kernel_only);
        sig = regularize(sig, in.e_cutoff);

        std::vector<complexd> g_new(n);
        dyson(sig.sigma, g_new);
        double dmax = 0.0;
        for (std::size_t j = 0; j < n; ++j) dmax = std::max(dmax, std::abs(g_new[j] - g[j]));
        const double resid = dmax / std::max(max_abs(g), 1e-300);
        result.diagnostics.residual_history.push_back(resid);
        result.diagnostics.residual = resid;
        sig.iterations = it + 1;
        if (resid < opts.tol) {
            g = g_new;
            result.converged = true;
            break;
        }
        if (resid > prev_resid && ++rises >= 2) {
            mixing = std::max(0.02, 0.5 * mixing);
            rises = 0;
        }
        prev_resid = resid;
        for (std::size_t j = 0; j < n; ++j) {
            g[j] = (1.0 - mixing) * g[j] + mixing * g_new[j];
        }
    }
    sig.converged = result.converged;
    result.diagnostics.phi_sq = -equal_time(g, grid).imag();
    result.diagnostics.e_cutoff = in.e_cutoff;
    result.sigma = sig;
    TimeOrderedGF gf;
    gf.grid = grid;
    gf.values = std::move(g);
    result.gf = std::move(gf);
    return result;
}

/// Finite-temperature path. Equilibrium lets the contour problem close on the
/// retarded component alone: G^>/< follow from G^R through the
/// fluctuation-dissipation relation, the kernels act on G^>/<(t), and the
/// retarded self-energy is the causal half-line transform of s> - s<. The
/// full contour matrices are materialized at the end. A Keldysh-component
/// consistency residual (discretization level, shrinking with the grid span)
/// guards the masks and transforms.
DysonResult solve_keldysh(const SolveInputs& in, const FrequencyGrid& grid,
                          const DysonOptions& opts) {
    const Constants constants{};
    const double hbar = constants.reduced_planck;
    const std::size_t n = grid.n_points;
    const std::size_t j0 = grid.zero_index();
    const std::vector<double> coth = coth_samples(grid, in.temperature, constants);
    const std::vector<double> win = band_window(grid, opts.window_fraction);

    auto dyson = [&](const std::vector<complexd>& sreg, std::vector<complexd>& out) {
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = 1.0 / (in.inv_g0_retarded[j] - sreg[j] / hbar);
        }
    };

    // G^>(w) = i Im G^R (coth + 1), G^<(w) = i Im G^R (coth - 1); the w = 0
    // samples (coth pole against Im G^R -> 0) are interpolated.
    auto kms_components = [&](const std::vector<complexd>& gr, std::vector<complexd>& gt,
                              std::vector<complexd>& lt) {
        for (std::size_t j = 0; j < n; ++j) {
            const double im = gr[j].imag();
            gt[j] = kI * (im * coth[j] + im);
            lt[j] = kI * (im * coth[j] - im);
        }
        gt[j0] = 0.5 * (gt[j0 - 1] + gt[j0 + 1]);
        lt[j0] = 0.5 * (lt[j0 - 1] + lt[j0 + 1]);
    };

    std::vector<complexd> sigma_reg(n, complexd{in.e_cutoff, 0.0});
    std::vector<complexd> g_r(n);
    dyson(sigma_reg, g_r);

    DysonResult result;
    double mixing = opts.mixing;
    double prev_resid = std::numeric_limits<double>::infinity();
    int rises = 0;
    complexd vertex{in.ej, 0.0};
    complexd sigma_const;
    double kms_resid = 0.0;

    std::vector<complexd> g_gt(n), g_lt(n), masked(n);
    for (int it = 0; it < opts.max_iter; ++it) {
        kms_components(g_r, g_gt, g_lt);
        const complexd g_eq = equal_time(g_gt, grid); // all contour components
                                                      // coincide at t = 0
        for (std::size_t j = 0; j < n; ++j) {
            g_gt[j] *= win[j];
            g_lt[j] *= win[j];
        }
        std::vector<complexd> gt_t = spectrum_to_time(g_gt, grid);
        std::vector<complexd> lt_t = spectrum_to_time(g_lt, grid);
        gt_t[j0] = g_eq;
        lt_t[j0] = g_eq;
        vertex = opts.cubic_kernel_only ? in.ej * (1.0 + 0.5 * g_eq.imag())
                                        : vertex_energy(in.ej, g_eq);
        const complexd amp = vertex * vertex / hbar;

        const Kernels kg = nonlinear_kernels(gt_t, opts.cubic_kernel_only);
        const Kernels kl = nonlinear_kernels(lt_t, opts.cubic_kernel_only);

        // Sigma^R(t) = theta(t) (s>(t) - s<(t)); s>(0) = s<(0) so the t = 0
        // sample vanishes and the mask is unambiguous.
        std::fill(masked.begin(), masked.end(), complexd{0.0, 0.0});
        for (std::size_t m = j0 + 1; m < n; ++m) masked[m] = kg.s[m] - kl.s[m];
        std::vector<complexd> sig_r = time_to_spectrum(masked, grid);
        check_aliasing(sig_r, grid);

        // Mask/transform consistency: Sigma^> - Sigma^< from the same kernels
        // must reproduce 2i Im Sigma^R.
        {
            std::vector<complexd> diff_t(n);
            for (std::size_t m = 0; m < n; ++m) diff_t[m] = kg.s[m] - kl.s[m];
            const std::vector<complexd> diff_w = time_to_spectrum(diff_t, grid);
            double worst = 0.0, scale = 1e-300;
            for (std::size_t j = 0; j < n; ++j) {
                scale = std::max(scale, std::abs(sig_r[j].imag()));
                worst = std::max(worst, std::abs(0.5 * diff_w[j].imag() - sig_r[j].imag()));
            }
            kms_resid = std::max(kms_resid, worst / scale);
            if (kms_resid > 0.02) {
                throw AccuracyError("dyson_solve: Keldysh component consistency broke down",
                                    kms_resid);
            }
        }

        complexd tad{0.0, 0.0};
        for (std::size_t m = j0 + 1; m < n; ++m) tad += kg.c[m] - kl.c[m];
        tad *= grid.time_step();
        const complexd c_inf = vertex + kI * amp * tad;

        const double s0 = (amp * sig_r[j0] + c_inf).real();
        for (std::size_t j = 0; j < n; ++j) {
            sig_r[j] = amp * sig_r[j] + c_inf - s0 + in.e_cutoff;
        }
        sigma_const = c_inf - s0 + in.e_cutoff;

        std::vector<complexd> g_new(n);
        dyson(sig_r, g_new);
        double dmax = 0.0;
        for (std::size_t j = 0; j < n; ++j) dmax = std::max(dmax, std::abs(g_new[j] - g_r[j]));
        const double resid = dmax / std::max(max_abs(g_r), 1e-300);
        result.diagnostics.residual_history.push_back(resid);
        result.diagnostics.residual = resid;
        result.sigma.iterations = it + 1;
        sigma_reg = std::move(sig_r);
        if (resid < opts.tol) {
            g_r = std::move(g_new);
            result.converged = true;
            break;
        }
        if (resid > prev_resid && ++rises >= 2) {
            mixing = std::max(0.02, 0.5 * mixing);
            rises = 0;
        }
        prev_resid = resid;
        for (std::size_t j = 0; j < n; ++j) {
            g_r[j] = (1.0 - mixing) * g_r[j] + mixing * g_new[j];
        }
    }

    // Materialize the contour objects from the retarded solution and coth.
    KeldyshGF gf;
    gf.grid = grid;
    gf.temperature = in.temperature;
    gf.pp.resize(n);
    gf.pm.resize(n);
    gf.mp.resize(n);
    gf.mm.resize(n);
    kms_components(g_r, g_gt, g_lt);
    for (std::size_t j = 0; j < n; ++j) {
        const complexd r = g_r[j];
        const complexd a = std::conj(r);
        const complexd k = g_gt[j] + g_lt[j]; // G^K = G^> + G^<
        gf.pp[j] = 0.5 * (k + r + a);
        gf.pm[j] = 0.5 * (k - r + a);
        gf.mp[j] = 0.5 * (k + r - a);
        gf.mm[j] = 0.5 * (k - r - a);
    }

    // Output-level fluctuation-dissipation residual; a genuine assembly or
    // rotation bug trips the abort threshold.
    {
        const auto rr = gf.retarded();
        const auto aa = gf.advanced();
        const auto kk = gf.keldysh();
        double worst = 0.0;
        const double scale = std::max(max_abs(kk), 1e-300);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == j0) continue;
            worst = std::max(worst, std::abs(kk[j] - (rr[j] - aa[j]) * coth[j]) / scale);
        }
        result.diagnostics.fdt_residual = worst;
        if (worst > opts.fdt_abort) {
            throw AccuracyError("dyson_solve: fluctuation-dissipation violation, "
                                "transform inconsistency",
                                worst);
        }
    }
    result.diagnostics.sigma_kms_residual = kms_resid;

    SelfEnergy sig;
    sig.grid = grid;
    sig.sigma = std::move(sigma_reg);
    sig.vertex_energy = vertex;
    sig.sigma_infinity = sigma_const;
    sig.e_cutoff = in.e_cutoff;
    sig.converged = result.converged;
    sig.iterations = result.sigma.iterations;
    result.sigma = std::move(sig);
    result.diagnostics.phi_sq = -equal_time(gf.pp, grid).imag();
    result.diagnostics.e_cutoff = in.e_cutoff;
    result.gf = std::move(gf);
    return result;
}

DysonResult solve_common(SolveInputs in, const FrequencyGrid& grid, const DysonOptions& opts) {
    if (!(in.e_cutoff > 0.0)) {
        throw ValidationError("dyson_solve: e_cutoff must be > 0 (infrared counter-term)");
    }
    if (in.temperature > 0.0) return solve_keldysh(in, grid, opts);
    return solve_timeordered(in, grid, opts);
}

} // namespace

DysonResult dyson_solve(const DeviceParams& device, double flux_frac, double temperature,
                        const FrequencyGrid& grid, const DysonOptions& opts) {
    device.validate();
    const double width = opts.loss_floor * device.array.char_impedance() /
                         (2.0 * device.array.inductance);
    grid.validate_for(device, width);
    SolveInputs in;
    in.inv_g0_retarded = device_env_samples(device, grid, opts.loss_floor).inv_g0_retarded;
    in.ej = circuit::ej_of_flux(device.squid, flux_frac);
    in.temperature = temperature;
    in.e_cutoff = opts.e_cutoff > 0.0 ? opts.e_cutoff : default_e_cutoff(device);
    in.cj = device.squid.capacitance;
    return solve_common(std::move(in), grid, opts);
}

DysonResult dyson_solve_custom(const std::function<complexd(double)>& inv_g0_retarded,
                               double ej, double temperature, const FrequencyGrid& grid,
                               const DysonOptions& opts) {
    SolveInputs in;
    in.inv_g0_retarded.resize(grid.n_points);
    for (std::size_t j = 0; j < grid.n_points; ++j) {
        in.inv_g0_retarded[j] = inv_g0_retarded(grid.omega(j));
    }
    in.ej = ej;
    in.temperature = temperature;
    in.e_cutoff = opts.e_cutoff;
    return solve_common(std::move(in), grid, opts);
}

ScalingCheck scaling_exponent_check(double alpha, double cutoff_ratio, std::size_t n_points) {
    if (!(alpha > 0.0) || alpha >= 0.5) {
        throw ValidationError("scaling_exponent_check: alpha must be in (0, 1/2)");
    }
    if (cutoff_ratio < 30.0) {
        throw ValidationError("scaling_exponent_check: fit window too narrow");
    }
    // Work in units hbar = E* = 1; the slope is scale free. The ultraviolet
    // cutoff is a smooth Gaussian at w_c = cutoff_ratio (a hard spectral edge
    // would ring in the time domain); the grid extends past it so the rolled
    // spectrum is fully held.
    FrequencyGrid grid(n_points, 3.2 * cutoff_ratio);
    const std::size_t n = grid.n_points;
    const std::size_t j0 = grid.zero_index();

    std::vector<complexd> g0(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double w = std::abs(grid.omega(j));
        const double roll = std::exp(-(w / cutoff_ratio) * (w / cutoff_ratio));
        g0[j] = roll / (kI * w / (2.0 * M_PI * alpha) - 1.0);
    }
    std::vector<complexd> g_time = spectrum_to_time(g0, grid);
    g_time[j0] = equal_time(g0, grid);

    std::vector<complexd> s(n);
    for (std::size_t m = 0; m < n; ++m) s[m] = std::sin(g_time[m]) - g_time[m];
    std::vector<complexd> sig = time_to_spectrum(s, grid);

    // Least squares of log|Im sigma| against log w (or w), on log-spaced
    // samples so neither end of the window dominates the comparison.
    auto band_fit = [&](double lo, double hi, bool log_x) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        int m = 0;
        const int samples = 60;
        for (int q = 0; q <= samples; ++q) {
            const double w = lo * std::pow(hi / lo, q / static_cast<double>(samples));
            const std::size_t j =
                j0 + static_cast<std::size_t>(std::llround(w / grid.spacing()));
            if (j <= j0 || j >= n) continue;
            const double im = std::abs(sig[j].imag());
            if (im <= 0.0) continue;
            const double xv = log_x ? std::log(w) : w;
            const double yv = std::log(im);
            sx += xv; sy += yv; sxx += xv * xv; sxy += xv * yv; syy += yv * yv;
            ++m;
        }
        struct Fit { double slope, stderr_, rss; int m; };
        const double denom = m * sxx - sx * sx;
        const double slope = (m * sxy - sx * sy) / denom;
        const double intercept = (sy - slope * sx) / m;
        const double rss = syy - intercept * sy - slope * sxy;
        const double sigma2 = rss / std::max(m - 2, 1);
        return Fit{slope, std::sqrt(sigma2 * m / denom), std::max(rss, 0.0), m};
    };

    const double ir_scale = 2.0 * M_PI * alpha;
    const double gm = std::sqrt(ir_scale * cutoff_ratio);
    ScalingCheck out;
    out.window_lo = gm / std::sqrt(10.0);
    out.window_hi = gm * std::sqrt(10.0);
    const auto mid = band_fit(out.window_lo, out.window_hi, true);
    if (mid.m < 8) throw ValidationError("scaling_exponent_check: fit window too narrow");
    out.slope = mid.slope;
    out.slope_stderr = mid.stderr_;

    // Model comparison on the roll-off flank above the multi-photon hump,
    // where a cutoff-dominated spectrum decays exponentially fast and a power
    // law cannot bend.
    const double hi_lo = 0.35 * cutoff_ratio, hi_hi = 1.2 * cutoff_ratio;
    out.power_rss = band_fit(hi_lo, hi_hi, true).rss;
    out.exponential_rss = band_fit(hi_lo, hi_hi, false).rss;
    return out;
}

std::vector<complexd> retarded_from_timeordered(const std::vector<complexd>& values,
                                                const FrequencyGrid& grid) {
    const std::size_t n = grid.n_points;
    const std::size_t j0 = grid.zero_index();
    std::vector<complexd> r(n);
    for (std::size_t j = 0; j < n; ++j) {
        r[j] = j >= j0 ? values[j] : std::conj(values[2 * j0 - j]);
    }
    return r;
}

ValidityReport perturbative_validity(const DeviceParams& device, double flux_frac,
                                     double ej_star, double omega_min, double threshold) {
    (void)device;
    (void)flux_frac;
    ValidityReport rep;
    const Constants constants{};
    rep.ratio = ej_star / (constants.reduced_planck * omega_min);
    rep.valid = rep.ratio < threshold;
    return rep;
}

} // namespace bsg::selfenergy
