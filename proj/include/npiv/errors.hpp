#pragma once

#include <stdexcept>
#include <string>

namespace npiv {

// Bad caller input: malformed data files, out-of-domain evaluation points,
// inconsistent options. Maps to CLI exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical breakdown: singular Gram matrices, rank-deficient whitened cross
// matrix, degenerate variances. Maps to CLI exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace npiv
