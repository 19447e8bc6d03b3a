#pragma once

#include <complex>
#include <vector>

namespace bsg::fft {

using complexd = std::complex<double>;

/// In-place forward DFT, X_m = sum_j x_j exp(-2 pi i j m / n). n power of two.
void forward(std::vector<complexd>& data);

/// In-place backward DFT, X_m = sum_j x_j exp(+2 pi i j m / n), unnormalized.
void backward(std::vector<complexd>& data);

} // namespace bsg::fft
