#ifndef SARSIM_FFT_HPP
#define SARSIM_FFT_HPP

#include <vector>

#include "vec.hpp"

namespace sarsim {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// iterative radix-2 Cooley-Tukey, in place; size must be a power of two.
// inverse includes the 1/N normalization.
inline void fft(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw Error("fft: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * kPi / double(len) * (inverse ? 1.0 : -1.0);
        cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                cplx u = a[i + j];
                cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= double(n);
    }
}

// row-major w x h grid, transformed along both axes
inline void fft2d(std::vector<cplx>& g, std::size_t w, std::size_t h, bool inverse) {
    if (g.size() != w * h) throw Error("fft2d: size mismatch");
    std::vector<cplx> tmp(std::max(w, h));
    for (std::size_t r = 0; r < h; ++r) {
        tmp.assign(g.begin() + r * w, g.begin() + (r + 1) * w);
        fft(tmp, inverse);
        std::copy(tmp.begin(), tmp.end(), g.begin() + r * w);
    }
    for (std::size_t c = 0; c < w; ++c) {
        tmp.resize(h);
        for (std::size_t r = 0; r < h; ++r) tmp[r] = g[r * w + c];
        fft(tmp, inverse);
        for (std::size_t r = 0; r < h; ++r) g[r * w + c] = tmp[r];
    }
}

} // namespace sarsim

#endif
