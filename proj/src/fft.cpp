#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace qet::detail {
namespace {

// n, howmany, stride, dist, sign
using PlanKey = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, int>;

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(const PlanKey& key) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const auto [n, howmany, stride, dist, sign] = key;
    // Planning with FFTW_ESTIMATE leaves the buffer untouched and is deterministic.
    std::vector<fftw_complex> scratch((n - 1) * stride + (howmany - 1) * dist + 1);
    int len = static_cast<int>(n);
    fftw_plan plan = fftw_plan_many_dft(1, &len, static_cast<int>(howmany), scratch.data(),
                                        nullptr, static_cast<int>(stride),
                                        static_cast<int>(dist), scratch.data(), nullptr,
                                        static_cast<int>(stride), static_cast<int>(dist),
                                        sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("fftw: plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void run(std::span<std::complex<double>> data, const PlanKey& key) {
  if (data.empty()) return;
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(cache().get(key), ptr, ptr);
}

}  // namespace

void dft(std::span<std::complex<double>> data, int sign) {
  run(data, {data.size(), 1, 1, data.size(), sign});
}

void dft_rows(std::span<std::complex<double>> data, std::size_t rows, std::size_t cols,
              int sign) {
  run(data, {cols, rows, 1, cols, sign});
}

void dft_cols(std::span<std::complex<double>> data, std::size_t rows, std::size_t cols,
              int sign) {
  run(data, {rows, cols, cols, 1, sign});
}

}  // namespace qet::detail
