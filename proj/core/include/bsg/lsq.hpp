#pragma once

#include <functional>
#include <vector>

namespace bsg::lsq {

struct Options {
    int max_iter = 200;
    double xtol = 1e-12;      // relative step size
    double ftol = 1e-14;      // relative cost decrease
    double lambda0 = 1e-3;    // initial damping
};

struct Result {
    std::vector<double> params;
    std::vector<double> covariance; // row-major p x p, scaled by rss/(m-p)
    double rss = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Damped least squares (Levenberg-Marquardt) with a forward-difference
/// Jacobian. residual_fn fills m residuals for the given parameter vector.
Result fit(const std::function<void(const std::vector<double>&, std::vector<double>&)>& residual_fn,
           std::size_t n_residuals, std::vector<double> initial, const Options& opts = {});

} // namespace bsg::lsq
