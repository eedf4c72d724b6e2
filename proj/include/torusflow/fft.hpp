#pragma once

// Thin wrapper around FFTW for the periodic n x n grid. Plans are created
// once per grid size on aligned scratch (FFTW_MEASURE); execution copies
// through a thread-local aligned buffer, so concurrent transforms on
// different threads are safe (plan creation itself is serialized).

#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace torusflow {

using cplx = std::complex<double>;

namespace detail {

struct FftPlans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

inline std::mutex& fft_mutex() {
  static std::mutex mu;
  return mu;
}

inline FftPlans& plans_for(int n) {
  static std::map<int, FftPlans> cache;
  std::lock_guard<std::mutex> lock(fft_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto* scratch = fftw_alloc_complex(static_cast<size_t>(n) * n);
  FftPlans pl;
  pl.fwd = fftw_plan_dft_2d(n, n, scratch, scratch, FFTW_FORWARD, FFTW_MEASURE);
  pl.bwd = fftw_plan_dft_2d(n, n, scratch, scratch, FFTW_BACKWARD, FFTW_MEASURE);
  fftw_free(scratch);
  if (!pl.fwd || !pl.bwd) throw std::runtime_error("fftw plan creation failed");
  return cache.emplace(n, pl).first->second;
}

struct AlignedScratch {
  fftw_complex* p = nullptr;
  size_t cap = 0;
  ~AlignedScratch() {
    if (p) fftw_free(p);
  }
  fftw_complex* get(size_t count) {
    if (cap < count) {
      if (p) fftw_free(p);
      p = fftw_alloc_complex(count);
      cap = count;
    }
    return p;
  }
};

inline fftw_complex* thread_scratch(size_t count) {
  thread_local AlignedScratch s;
  return s.get(count);
}

}  // namespace detail

// In-place unnormalized 2D transform; sign = FFTW_FORWARD or FFTW_BACKWARD.
inline void fft2(std::vector<cplx>& a, int n, int sign) {
  const size_t count = static_cast<size_t>(n) * n;
  if (a.size() != count) throw std::invalid_argument("fft2: size mismatch");
  detail::FftPlans& pl = detail::plans_for(n);
  fftw_complex* s = detail::thread_scratch(count);
  std::memcpy(static_cast<void*>(s), static_cast<const void*>(a.data()), count * sizeof(cplx));
  fftw_execute_dft(sign == FFTW_FORWARD ? pl.fwd : pl.bwd, s, s);
  std::memcpy(static_cast<void*>(a.data()), static_cast<const void*>(s), count * sizeof(cplx));
}

// Integer frequency for index m on an n-point grid (n even): 0..n/2-1, -n/2..-1.
inline int fft_freq(int m, int n) { return m < n / 2 ? m : m - n; }

}  // namespace torusflow
