#include "aperture/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "aperture/error.hpp"

namespace aperture::fft {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
// Plans are created once per (rows, cols, sign) under a lock and kept for the
// life of the process.
class PlanCache {
 public:
  fftw_plan get(int rows, int cols, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(rows, cols, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> scratch(static_cast<std::size_t>(rows) * cols);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan =
        fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw Error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(std::span<Complex> data, int rows, int cols, int sign) {
  if (rows <= 0 || cols <= 0 ||
      data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw InvalidArgument("fft buffer size does not match rows x cols");
  }
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(cache().get(rows, cols, sign), buf, buf);
}

}  // namespace

int fast_size(int n) {
  if (n < 2) return 2;
  for (int candidate = n + (n % 2);; candidate += 2) {
    int m = candidate;
    for (int p : {2, 3, 5, 7}) {
      while (m % p == 0) m /= p;
    }
    if (m == 1) return candidate;
  }
}

void forward(std::span<Complex> data, int rows, int cols) {
  execute(data, rows, cols, FFTW_FORWARD);
}

void inverse(std::span<Complex> data, int rows, int cols) {
  execute(data, rows, cols, FFTW_BACKWARD);
  const double scale = 1.0 / (static_cast<double>(rows) * cols);
  for (auto& v : data) v *= scale;
}

}  // namespace aperture::fft
