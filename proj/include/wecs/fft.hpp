// Thin FFTW wrapper. Plan creation/destruction is serialized because the
// FFTW planner is not thread-safe; execution on distinct plans is.
#pragma once

#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace wecs::fft {

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

/// In-place unnormalized DFT of arbitrary length. sign = FFTW_FORWARD (-1)
/// uses e^{-i...}, FFTW_BACKWARD (+1) uses e^{+i...}.
inline void transform(std::vector<std::complex<double>>& data, int sign) {
    if (data.size() < 2) return;
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, sign,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
}

inline void forward(std::vector<std::complex<double>>& data) {
    transform(data, FFTW_FORWARD);
}

/// Unnormalized inverse transform; divide by N to invert forward().
inline void inverse(std::vector<std::complex<double>>& data) {
    transform(data, FFTW_BACKWARD);
}

}  // namespace wecs::fft
