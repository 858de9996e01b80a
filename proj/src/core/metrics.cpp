#include "mapad/core/metrics.hpp"

#include "mapad/error.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace mapad {

double auc(const Eigen::Ref<const Eigen::VectorXd>& scores,
           const Eigen::Ref<const Eigen::VectorXi>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::dimension, "auc: size mismatch");
  const Index n = scores.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) < scores(b); });

  double rank_sum_pos = 0.0;
  double n_pos = 0.0;
  for (Index i = 0; i < n;) {
    Index j = i;
    while (j + 1 < n && scores(order[j + 1]) == scores(order[i])) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index k = i; k <= j; ++k)
      if (labels(order[k]) == 1) {
        rank_sum_pos += avg_rank;
        n_pos += 1.0;
      }
    i = j + 1;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0)
    throw Error(ErrorCode::undefined_metric, "auc needs both classes present");
  return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double accuracy(const Eigen::Ref<const Eigen::VectorXi>& predicted,
                const Eigen::Ref<const Eigen::VectorXi>& labels) {
  if (predicted.size() != labels.size() || labels.size() == 0)
    throw Error(ErrorCode::dimension, "accuracy: size mismatch or empty input");
  return static_cast<double>((predicted.array() == labels.array()).count()) /
         static_cast<double>(labels.size());
}

double multiclass_auc(const Eigen::Ref<const Eigen::MatrixXd>& proba,
                      const Eigen::Ref<const Eigen::VectorXi>& labels) {
  if (proba.cols() != labels.size()) throw Error(ErrorCode::dimension, "multiclass_auc: size mismatch");
  if (proba.rows() == 2) return auc(proba.row(1).transpose(), labels);
  double total = 0.0;
  int used = 0;
  for (Index m = 0; m < proba.rows(); ++m) {
    const Eigen::VectorXi one_vs_rest = (labels.array() == static_cast<int>(m)).cast<int>();
    const Index pos = one_vs_rest.sum();
    if (pos == 0 || pos == labels.size()) continue;
    total += auc(proba.row(m).transpose(), one_vs_rest);
    ++used;
  }
  if (used == 0) throw Error(ErrorCode::undefined_metric, "multiclass_auc: no class has both outcomes");
  return total / used;
}

}  // namespace mapad
