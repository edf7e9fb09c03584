#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

// Configuration or argument outside its documented range.
class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Result would be unphysical (negative symplectic eigenvalue, a*b - c^2 < 1, ...).
class numerical_domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Transmittance fully blocked (E[sqrt T] == 0); estimators undefined.
class blocked_channel : public numerical_domain_error {
 public:
  using numerical_domain_error::numerical_domain_error;
};

// Finite-size worst-case estimate left no usable transmittance.
class estimation_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reading or writing a file failed.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw invalid_input(what);
}

}  // namespace detail
}  // namespace cvqkd
