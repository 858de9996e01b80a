#pragma once

#include "mapad/core/dataset.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace mapad {

struct SplitSpec {
  std::vector<Index> train_idx;
  std::vector<Index> valid_idx;
  std::vector<Index> test_idx;
  std::uint64_t seed = 0;

  const std::vector<Index>& by_name(const std::string& name) const;
};

/// Seeded shuffle of 0..count-1 cut into train/valid/test. Valid and test
/// sizes are round(count * ratio); train takes the remainder.
SplitSpec split(Index count, std::array<double, 3> ratios = {0.5, 0.25, 0.25},
                std::uint64_t seed = 0);

}  // namespace mapad
