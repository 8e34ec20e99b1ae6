#pragma once

// Oracles and fixtures shared by the unit and acceptance suites. Everything
// here is independent of the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

namespace crossview::testing {

/// Central difference (f(x+h) - f(x-h)) / 2h.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Richardson-extrapolated central difference: (4 D(h/2) - D(h)) / 3.
inline double richardson_derivative(const std::function<double(double)>& f, double x, double h) {
  const double coarse = central_difference(f, x, h);
  const double fine = central_difference(f, x, h / 2.0);
  return (4.0 * fine - coarse) / 3.0;
}

/// |a - b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

/// Uniform doubles from a std engine; deliberately not the library's Rng.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : engine_(seed) {}
  double operator()(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

 private:
  std::mt19937_64 engine_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("crossview_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace crossview::testing
