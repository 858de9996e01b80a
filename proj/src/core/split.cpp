#include "mapad/core/split.hpp"

#include "mapad/error.hpp"

#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

namespace mapad {

const std::vector<Index>& SplitSpec::by_name(const std::string& name) const {
  if (name == "train") return train_idx;
  if (name == "valid") return valid_idx;
  if (name == "test") return test_idx;
  throw Error(ErrorCode::invalid_argument, "unknown split '" + name + "'");
}

SplitSpec split(Index count, std::array<double, 3> ratios, std::uint64_t seed) {
  if (count < 4) throw Error(ErrorCode::too_few_rows, "split needs at least 4 rows, got " +
                                                          std::to_string(count));
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (!(ratios[0] > 0 && ratios[1] >= 0 && ratios[2] >= 0) || std::abs(total - 1.0) > 1e-9)
    throw Error(ErrorCode::invalid_argument, "split ratios must be non-negative and sum to 1");

  std::vector<Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }

  const auto n = static_cast<double>(count);
  auto n_valid = static_cast<Index>(std::llround(n * ratios[1]));
  auto n_test = static_cast<Index>(std::llround(n * ratios[2]));
  n_valid = std::clamp<Index>(n_valid, 0, count - 1);
  n_test = std::clamp<Index>(n_test, 0, count - 1 - n_valid);
  const Index n_train = count - n_valid - n_test;

  SplitSpec s;
  s.seed = seed;
  s.train_idx.assign(order.begin(), order.begin() + n_train);
  s.valid_idx.assign(order.begin() + n_train, order.begin() + n_train + n_valid);
  s.test_idx.assign(order.begin() + n_train + n_valid, order.end());
  return s;
}

}  // namespace mapad
