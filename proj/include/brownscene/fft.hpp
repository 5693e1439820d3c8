#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>

#include "brownscene/error.hpp"

namespace brownscene {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Forward complex DFT of a fixed length, X_k = sum_j x_j exp(-2 pi i jk/N).
///
/// Planning goes through a global lock (the FFTW planner is not reentrant);
/// `transform` is safe to call concurrently. Plans use FFTW_ESTIMATE so the
/// chosen algorithm, and therefore the rounding, is the same on every run.
class ComplexFft {
 public:
  explicit ComplexFft(std::size_t n) : n_(n) {
    if (n == 0) throw ParameterError("ComplexFft: length must be positive");
    Buffer buf = allocate(n);
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf.get(), buf.get(), FFTW_FORWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_ == nullptr) throw GenerationError("ComplexFft: FFTW planning failed");
  }

  ComplexFft(const ComplexFft&) = delete;
  ComplexFft& operator=(const ComplexFft&) = delete;

  ~ComplexFft() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }

  std::size_t size() const noexcept { return n_; }

  /// In-place transform of exactly size() elements.
  void transform(std::span<std::complex<double>> data) const {
    if (data.size() != n_) throw ParameterError("ComplexFft: size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_, p, p);
  }

 private:
  struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
  };
  using Buffer = std::unique_ptr<fftw_complex[], FftwFree>;
  static Buffer allocate(std::size_t n) { return Buffer(fftw_alloc_complex(n)); }

  std::size_t n_;
  fftw_plan plan_ = nullptr;
};

}  // namespace brownscene
