#include "taco/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "taco/error.hpp"

namespace taco {

namespace {

LossReport contrastive(const Eigen::MatrixXd& z, const std::vector<std::vector<int>>& positives, double tau,
                       LossAggregation aggregation) {
  const int n = static_cast<int>(z.rows());
  LossReport report;
  report.per_anchor.assign(n, 0.0);
  report.grad = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (int i = 0; i < n; ++i) {
    if (!positives[i].empty()) ++report.contributing;
    ++report.positive_count_hist[static_cast<int>(positives[i].size())];
  }
  if (report.contributing == 0) throw ContractError("contrastive loss: no anchor has a positive");
  if (!z.allFinite()) throw NumericError("contrastive loss: non-finite embeddings");

  const Eigen::MatrixXd logits = (z * z.transpose()) / tau;
  const double weight = aggregation == LossAggregation::kMean ? 1.0 / report.contributing : 1.0;
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(n, n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& pos = positives[i];
    if (pos.empty()) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a)
      if (a != i) m = std::max(m, logits(i, a));
    double denom = 0.0;
    for (int a = 0; a < n; ++a)
      if (a != i) denom += std::exp(logits(i, a) - m);
    const double lse = m + std::log(denom);
    double mean_pos = 0.0;
    for (int p : pos) mean_pos += logits(i, p);
    mean_pos /= static_cast<double>(pos.size());
    const double term = lse - mean_pos;
    report.per_anchor[i] = term;
    total += term;

    for (int a = 0; a < n; ++a)
      if (a != i) dlogits(i, a) = weight * std::exp(logits(i, a) - lse);
    for (int p : pos) dlogits(i, p) -= weight / static_cast<double>(pos.size());
  }
  report.loss = total * weight;
  if (!std::isfinite(report.loss)) throw NumericError("contrastive loss is not finite");
  // logits = z z^T / tau, so dz = (G + G^T) z / tau.
  report.grad = (dlogits + dlogits.transpose()) * z / tau;
  return report;
}

void check_inputs(const Eigen::MatrixXd& z, std::size_t n, double tau, const char* what) {
  if (z.rows() < 2) throw ContractError(std::string(what) + ": need at least two rows");
  if (static_cast<std::size_t>(z.rows()) != n) {
    throw ContractError(std::string(what) + ": " + std::to_string(n) + " labels for " + std::to_string(z.rows()) +
                        " rows");
  }
  if (!(tau > 0)) throw ConfigError(std::string(what) + ": tau must be positive");
}

}  // namespace

LossReport self_contrastive_loss(const Eigen::MatrixXd& z, const std::vector<int>& pair_of, double tau,
                                 LossAggregation aggregation) {
  check_inputs(z, pair_of.size(), tau, "self_contrastive_loss");
  const int n = static_cast<int>(z.rows());
  std::vector<std::vector<int>> positives(n);
  for (int i = 0; i < n; ++i) {
    const int p = pair_of[i];
    if (p < 0 || p >= n || p == i) {
      throw ContractError("self_contrastive_loss: anchor " + std::to_string(i) + " has no valid positive");
    }
    positives[i] = {p};
  }
  return contrastive(z, positives, tau, aggregation);
}

LossReport sup_contrastive_loss(const Eigen::MatrixXd& z, const std::vector<int>& labels, double tau,
                                LossAggregation aggregation) {
  check_inputs(z, labels.size(), tau, "sup_contrastive_loss");
  const int n = static_cast<int>(z.rows());
  std::vector<std::vector<int>> positives(n);
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < n; ++p)
      if (p != i && labels[p] == labels[i]) positives[i].push_back(p);
  return contrastive(z, positives, tau, aggregation);
}

}  // namespace taco
