#pragma once

#include <functional>
#include <vector>

namespace bsg::quadrature {

struct Result {
    double value = 0.0;
    double error = 0.0;      // estimated absolute error
    long evaluations = 0;
};

/// Adaptive Gauss-Kronrod (G7/K15) on [a, b]. Splits the worst interval until
/// the summed error estimate satisfies abs_tol + rel_tol*|integral| or the
/// interval budget runs out; in the latter case the result carries the
/// achieved error (caller decides whether that is fatal).
Result integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, double rel_tol, int max_intervals = 4000);

/// Same, with initial breakpoints (useful when the integrand has known peaks:
/// each [p_i, p_i+1] starts as its own interval).
Result integrate_segmented(const std::function<double(double)>& f,
                           const std::vector<double>& breakpoints,
                           double abs_tol, double rel_tol, int max_intervals = 200000);

} // namespace bsg::quadrature
