#include "bsg/fft.hpp"

#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace bsg::fft {

namespace {

// FFTW plan creation is not thread safe; execution of a fresh plan on its own
// buffer is. Plans use FFTW_ESTIMATE so results are run-to-run deterministic.
std::mutex plan_mutex;

void run(std::vector<complexd>& data, int sign) {
    if (data.empty() || (data.size() & (data.size() - 1)) != 0) {
        throw std::invalid_argument("fft: size must be a nonzero power of two");
    }
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        fftw_destroy_plan(plan);
    }
}

} // namespace

void forward(std::vector<complexd>& data) { run(data, FFTW_FORWARD); }
void backward(std::vector<complexd>& data) { run(data, FFTW_BACKWARD); }

} // namespace bsg::fft
