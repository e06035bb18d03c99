#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace papr::detail {

// Plans are cached inside the FFT object, one per thread.
inline Eigen::FFT<double>& fft_engine() {
    thread_local Eigen::FFT<double> engine = [] {
        Eigen::FFT<double> e;
        e.SetFlag(Eigen::FFT<double>::Unscaled);
        return e;
    }();
    return engine;
}

/// sum_t x[t] exp(-j 2 pi k t / n)
template <class In>
Eigen::VectorXcd fft(const In& x) {
    Eigen::VectorXcd src = x;
    if (src.size() <= 1) return src;  // kissfft cannot plan length 1
    Eigen::VectorXcd dst(src.size());
    fft_engine().fwd(dst, src);
    return dst;
}

/// sum_k x[k] exp(+j 2 pi k t / n), no 1/n factor
template <class In>
Eigen::VectorXcd ifft(const In& x) {
    Eigen::VectorXcd src = x;
    if (src.size() <= 1) return src;
    Eigen::VectorXcd dst(src.size());
    fft_engine().inv(dst, src);
    return dst;
}

}  // namespace papr::detail
