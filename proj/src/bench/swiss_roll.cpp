#include "mapad/bench/swiss_roll.hpp"

#include "mapad/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mapad::bench {

void SwissRollSpec::validate() const {
  if (n_points < 8) throw Error(ErrorCode::invalid_argument, "swiss roll needs at least 8 points");
  if (turns < 1) throw Error(ErrorCode::invalid_argument, "swiss roll needs at least one turn");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise sigma must be non-negative");
  if (extra_dims < 0) throw Error(ErrorCode::invalid_argument, "extra_dims must be non-negative");
}

Dataset gen_swiss_roll(const SwissRollSpec& spec) {
  spec.validate();
  const double pi = std::numbers::pi;
  const double t_max = 2.0 * pi * spec.turns;
  const Index D = 2 + spec.extra_dims;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> angle(0.0, t_max);
  std::uniform_real_distribution<double> nuisance(-1.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);

  Dataset d;
  d.features.resize(D, spec.n_points);
  d.labels.resize(spec.n_points);
  for (Index i = 0; i < spec.n_points; ++i) {
    const int c = static_cast<int>(i % 2);
    const double t = angle(rng);
    const double r = 0.1 + 0.9 * t / t_max;
    d.features(0, i) = r * std::cos(t + c * pi);
    d.features(1, i) = r * std::sin(t + c * pi);
    if (spec.noise_sigma > 0.0) {
      d.features(0, i) += spec.noise_sigma * jitter(rng);
      d.features(1, i) += spec.noise_sigma * jitter(rng);
    }
    for (Index e = 2; e < D; ++e) d.features(e, i) = nuisance(rng);
    d.labels(i) = c;
  }
  d.column_names = {"x1", "x2"};
  for (Index e = 2; e < D; ++e) d.column_names.push_back("u" + std::to_string(e - 1));
  d.column_kinds.assign(static_cast<std::size_t>(D), ColumnKind::continuous);
  d.num_classes = 2;
  d.label_name = "spiral";
  d.class_values = {0.0, 1.0};
  return d;
}

}  // namespace mapad::bench
