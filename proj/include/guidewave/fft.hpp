#pragma once

// RAII wrapper around in-place FFTW plans for a row-major complex array.

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <mutex>
#include <string_view>
#include <utility>
#include <vector>

#include "guidewave/error.hpp"

namespace guidewave::fft {

/// FFTW planner rigour. `estimate` plans are chosen without timing, so the
/// arithmetic (and every output byte) is reproducible run to run; `measure`
/// is faster on large grids but may pick a different algorithm each run.
enum class Planner { estimate, measure };

constexpr std::string_view to_string(Planner p) { return p == Planner::estimate ? "estimate" : "measure"; }

inline Planner planner_from_string(std::string_view s) {
  if (s == "estimate") return Planner::estimate;
  if (s == "measure") return Planner::measure;
  throw Error(ErrorCode::invalid_parameter, "unknown FFT planner '" + std::string(s) + "'");
}

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Plan2D {
 public:
  Plan2D() = default;

  /// Plans forward and backward transforms of `data` laid out as [rows][cols].
  Plan2D(std::vector<std::complex<double>>& data, std::size_t rows, std::size_t cols, Planner planner)
      : rows_(rows), cols_(cols) {
    require(data.size() == rows * cols, ErrorCode::invalid_parameter, "FFT buffer size does not match grid");
    // Executed on caller buffers of arbitrary alignment.
    const unsigned flags = (planner == Planner::measure ? FFTW_MEASURE : FFTW_ESTIMATE) | FFTW_UNALIGNED;
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    std::lock_guard lock(planner_mutex());
    if (planner == Planner::measure) {
      // MEASURE overwrites the buffer while timing.
      std::vector<std::complex<double>> keep(data);
      make_plans(p, flags);
      std::copy(keep.begin(), keep.end(), data.begin());
    } else {
      make_plans(p, flags);
    }
    require(forward_ && backward_, ErrorCode::numerical_failure, "FFTW planning failed");
  }

  Plan2D(const Plan2D&) = delete;
  Plan2D& operator=(const Plan2D&) = delete;
  Plan2D(Plan2D&& o) noexcept { swap(o); }
  Plan2D& operator=(Plan2D&& o) noexcept {
    if (this != &o) {
      reset();
      swap(o);
    }
    return *this;
  }
  ~Plan2D() { reset(); }

  /// Unnormalised transforms of any buffer with the planned size.
  void forward(std::vector<std::complex<double>>& data) const {
    check(data);
    fftw_execute_dft(forward_, reinterpret_cast<fftw_complex*>(data.data()),
                     reinterpret_cast<fftw_complex*>(data.data()));
  }
  void backward(std::vector<std::complex<double>>& data) const {
    check(data);
    fftw_execute_dft(backward_, reinterpret_cast<fftw_complex*>(data.data()),
                     reinterpret_cast<fftw_complex*>(data.data()));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  void check(std::vector<std::complex<double>>& data) const {
    require(data.size() == rows_ * cols_, ErrorCode::numerical_failure, "FFT buffer does not match the planned layout");
  }

  void make_plans(fftw_complex* p, unsigned flags) {
    const int r = static_cast<int>(rows_), c = static_cast<int>(cols_);
    forward_ = fftw_plan_dft_2d(r, c, p, p, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_2d(r, c, p, p, FFTW_BACKWARD, flags);
  }

  void reset() {
    std::lock_guard lock(planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
    forward_ = backward_ = nullptr;
  }

  void swap(Plan2D& o) noexcept {
    std::swap(forward_, o.forward_);
    std::swap(backward_, o.backward_);
    std::swap(rows_, o.rows_);
    std::swap(cols_, o.cols_);
  }

  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::size_t rows_ = 0, cols_ = 0;
};

/// One-dimensional forward transform of a copy (used by the fringe analysis).
inline std::vector<std::complex<double>> forward_1d(std::vector<std::complex<double>> data) {
  const int n = static_cast<int>(data.size());
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return data;
}

}  // namespace guidewave::fft
