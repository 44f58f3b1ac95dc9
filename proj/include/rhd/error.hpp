#pragma once

#include <stdexcept>
#include <string>

namespace rhd {

// Raised when the covariance spectrum cannot support the requested truncation
// level (the truncated inverse square root would be undefined).
class rank_error : public std::runtime_error {
 public:
  rank_error(const std::string& what, int usable_rank)
      : std::runtime_error(what), usable_rank_(usable_rank) {}

  int usable_rank() const noexcept { return usable_rank_; }

 private:
  int usable_rank_;
};

// Raised when no pool direction satisfies the RKHS-norm constraint.
class empty_pool_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rhd
