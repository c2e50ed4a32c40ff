#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

namespace taco {

enum class LossAggregation {
  kMean,  // divide by the number of contributing anchors
  kSum,   // plain sum over anchors
};

struct LossReport {
  double loss = 0.0;
  // One entry per row of z; 0 for anchors without positives.
  std::vector<double> per_anchor;
  // |P_i| -> number of anchors with that many positives.
  std::map<int, int> positive_count_hist;
  int contributing = 0;
  // dL/dz, same shape as z.
  Eigen::MatrixXd grad;
};

// Self-supervised objective: anchor i has the single positive pair_of[i];
// every other row is in the denominator.
LossReport self_contrastive_loss(const Eigen::MatrixXd& z, const std::vector<int>& pair_of, double tau,
                                 LossAggregation aggregation = LossAggregation::kMean);

// Supervised objective over class labels. Anchors whose class occurs once
// contribute 0; throws ContractError if no anchor has a positive.
LossReport sup_contrastive_loss(const Eigen::MatrixXd& z, const std::vector<int>& labels, double tau,
                                LossAggregation aggregation = LossAggregation::kMean);

}  // namespace taco
