#pragma once

// Thin RAII layer over FFTW. Planner calls are serialised; execution is
// thread-safe. Buffers always come from fftw_malloc so that plans (and hence
// rounding) do not depend on the alignment of caller memory.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <cstring>
#include <mutex>
#include <new>
#include <span>

namespace sshphoton::fft {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Smallest n' >= n whose prime factors are 2, 3 and 5.
inline std::size_t good_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t f : {2u, 3u, 5u})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

template <class T>
class Buffer {
 public:
  explicit Buffer(std::size_t n) : n_(n), p_(static_cast<T*>(fftw_malloc(sizeof(T) * (n ? n : 1)))) {
    if (!p_) throw std::bad_alloc();
    std::memset(static_cast<void*>(p_), 0, sizeof(T) * n_);
  }
  ~Buffer() { fftw_free(p_); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;

  T* data() { return p_; }
  const T* data() const { return p_; }
  std::size_t size() const { return n_; }
  T& operator[](std::size_t i) { return p_[i]; }
  const T& operator[](std::size_t i) const { return p_[i]; }
  std::span<T> span() { return {p_, n_}; }

 private:
  std::size_t n_;
  T* p_;
};

class Plan {
 public:
  explicit Plan(fftw_plan p) : p_(p) {}
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  void execute() const { fftw_execute(p_); }

 private:
  fftw_plan p_;
};

inline fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

/// Real-to-half-complex forward transform of length n.
inline Plan make_r2c(std::size_t n, Buffer<double>& in, Buffer<std::complex<double>>& out) {
  std::lock_guard lock(planner_mutex());
  return Plan(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), as_fftw(out.data()), FFTW_ESTIMATE));
}

inline Plan make_c2r(std::size_t n, Buffer<std::complex<double>>& in, Buffer<double>& out) {
  std::lock_guard lock(planner_mutex());
  return Plan(fftw_plan_dft_c2r_1d(static_cast<int>(n), as_fftw(in.data()), out.data(), FFTW_ESTIMATE));
}

/// Complex transform; sign = FFTW_FORWARD (e^{-i}) or FFTW_BACKWARD (e^{+i}).
inline Plan make_c2c(std::size_t n, Buffer<std::complex<double>>& in, Buffer<std::complex<double>>& out, int sign) {
  std::lock_guard lock(planner_mutex());
  return Plan(fftw_plan_dft_1d(static_cast<int>(n), as_fftw(in.data()), as_fftw(out.data()), sign, FFTW_ESTIMATE));
}

}  // namespace sshphoton::fft
