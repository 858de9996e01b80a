#pragma once

#include "mapad/core/dataset.hpp"

#include <cstdint>

namespace mapad::bench {

/// Two interleaved spirals. Class c in {0, 1} lies on
///   r(t) (cos(t + c pi), sin(t + c pi)),  r(t) = 0.1 + 0.9 t / (2 pi turns),
/// t uniform on [0, 2 pi turns], plus isotropic Gaussian noise and
/// `extra_dims` nuisance columns uniform on [-1, 1].
struct SwissRollSpec {
  Index n_points = 1024;
  int turns = 2;
  double noise_sigma = 0.0;
  int extra_dims = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Class 0 gets ceil(n/2) points, class 1 the rest; records alternate classes.
Dataset gen_swiss_roll(const SwissRollSpec& spec);

}  // namespace mapad::bench
