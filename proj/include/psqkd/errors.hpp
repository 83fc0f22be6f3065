#pragma once

#include <stdexcept>
#include <string>

namespace psqkd {

// Parameters outside the entangling-cloner model's domain.  The canonical
// case is a lossless channel (eta = 1) carrying excess noise (xi > 0): the
// cloner injects noise through a beamsplitter tap, and without loss there is
// no tap to feed, so Eve's state family is undefined.
class model_domain_error : public std::domain_error {
 public:
  explicit model_domain_error(const std::string& what)
      : std::domain_error(what) {}
};

// Adaptive refinement stalled before reaching the requested tolerance.
// `partial_value` carries the best estimate obtained so far.
class no_convergence : public std::runtime_error {
 public:
  no_convergence(const std::string& what, double partial)
      : std::runtime_error(what), partial_value(partial) {}

  double partial_value;
};

}  // namespace psqkd
