#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace auglab {

inline constexpr int kDims = 5;
inline constexpr double kDefaultWMax = 5.0;

using Vec5 = Eigen::Matrix<double, kDims, 1>;

// Error categories map one-to-one onto CLI exit codes (see README).
enum class ErrorCode {
  domain = 10,
  params = 11,
  input = 12,
  convergence = 13,
  inconsistency = 14,
  io = 15,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Workplace design W = (interface, authority, orchestration, learning, psychosocial),
// each component in [0, w_max].
class DesignVector {
 public:
  DesignVector() = default;
  explicit DesignVector(const Vec5& w, double w_max = kDefaultWMax);

  static DesignVector constant(double value, double w_max = kDefaultWMax);

  const Vec5& values() const { return w_; }
  double operator[](int k) const { return w_[k]; }
  double w_max() const { return w_max_; }

 private:
  Vec5 w_ = Vec5::Zero();
  double w_max_ = kDefaultWMax;
};

}  // namespace auglab
