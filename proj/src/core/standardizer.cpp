#include "mapad/core/standardizer.hpp"

#include "mapad/error.hpp"

#include <cmath>

namespace mapad {

Standardizer Standardizer::identity(Index dim) {
  return Standardizer{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim),
                      std::vector<bool>(static_cast<std::size_t>(dim), false)};
}

std::pair<Dataset, Standardizer> standardize(const Dataset& data, std::span<const Index> fit_on) {
  if (fit_on.empty()) throw Error(ErrorCode::invalid_argument, "standardize: empty fit set");
  const Index D = data.dim();
  Standardizer st = Standardizer::identity(D);
  const double n = static_cast<double>(fit_on.size());
  for (Index d = 0; d < D; ++d) {
    if (data.column_kinds[static_cast<std::size_t>(d)] == ColumnKind::binary) continue;
    double mean = 0.0;
    for (Index t : fit_on) mean += data.features(d, t);
    mean /= n;
    double var = 0.0;
    for (Index t : fit_on) {
      const double e = data.features(d, t) - mean;
      var += e * e;
    }
    var /= n;  // population convention
    if (!(var > 0.0))
      throw Error(ErrorCode::degenerate_column,
                  "column '" + data.column_names[static_cast<std::size_t>(d)] +
                      "' has zero variance on the fit records");
    st.means(d) = mean;
    st.stddevs(d) = std::sqrt(var);
    st.scaled[static_cast<std::size_t>(d)] = true;
  }
  return {apply_standardizer(data, st), st};
}

Dataset apply_standardizer(const Dataset& data, const Standardizer& st) {
  if (st.dim() != data.dim()) throw Error(ErrorCode::dimension, "standardizer dimension mismatch");
  Dataset out = data;
  out.features = st.transform(data.features);
  return out;
}

}  // namespace mapad
