#pragma once

#include <stdexcept>
#include <string>

namespace sensedelay {

enum class ErrorCode {
  InvalidArgument = 1,
  Domain,
  NoRoots,
  Saturated,
  InconsistentRegime,
  DivergentService,
  AlohaSaturated,
  Config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when the aggregate packet rate is at or above the maximum data
// throughput. Carries the bound so callers can report it.
class NoRootsError : public Error {
 public:
  NoRootsError(double lambda_hat, double lambda_hat_max)
      : Error(ErrorCode::NoRoots, "no unsaturated fixed point: aggregate rate " +
                                      std::to_string(lambda_hat) + " >= maximum throughput " +
                                      std::to_string(lambda_hat_max)),
        lambda_hat_max_(lambda_hat_max) {}
  double lambda_hat_max() const noexcept { return lambda_hat_max_; }

 private:
  double lambda_hat_max_;
};

class SaturatedError : public Error {
 public:
  SaturatedError(ErrorCode code, const std::string& what, double lambda_hat_max)
      : Error(code, what), lambda_hat_max_(lambda_hat_max) {}
  double lambda_hat_max() const noexcept { return lambda_hat_max_; }

 private:
  double lambda_hat_max_;
};

}  // namespace sensedelay
