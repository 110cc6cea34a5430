#pragma once

#include "auglab/params.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(AUGLAB_SOURCE_DIR) / rel;
}

inline auglab::Calibration trap_calibration() {
  return auglab::load_calibration(source_path("config/trap-calibration.params"));
}

inline auglab::Vec5 random_w(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  auglab::Vec5 w;
  for (int k = 0; k < auglab::kDims; ++k) w[k] = u(rng);
  return w;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b))); }

}  // namespace testing
