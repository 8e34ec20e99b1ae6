#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crossview/dataset.hpp"
#include "crossview/model.hpp"

namespace crossview {

struct TrainConfig {
  int epochs = 6;
  int pretrain_epochs = 6;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  WeightDecayMode decay_mode = WeightDecayMode::coupled;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  HeadWeights head_weights{1.0, 1.0, 1.0};
  double simplex_eps = kDefaultSimplexEps;
  // Gaussian noise added to raw features during head training. Off by default.
  double feature_jitter = 0.0;
  bool shuffle = true;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);
AdamConfig adam_config(const TrainConfig& config);

/// Per-dimension mean and 1/std over `records`; constant dimensions get 1.
FeatureScaler fit_scaler(const std::vector<GeoRecord>& records);

struct NllReport {
  double scene = 0.0;
  double image = 0.0;
  double counts = 0.0;
  double total = 0.0;  // head-weighted sum
};

/// Mean per-head NLL over `records` and the weighted total.
NllReport evaluate_nll(const ModelState& model, const std::vector<GeoRecord>& records,
                       const HeadWeights& head_weights = {1.0, 1.0, 1.0},
                       double simplex_eps = kDefaultSimplexEps);

/// Mean of KL(scene || softmax) + KL(image || softmax) under the temporary
/// pretraining projections.
struct PretrainProjections {
  DenseLayer scene;
  DenseLayer image;
};
double pretrain_kl(const ModelState& model, const PretrainProjections& projections,
                   const std::vector<GeoRecord>& records);

struct PretrainResult {
  ModelState model;                 // backbone_frozen == true
  double initial_kl = 0.0;          // training-set KL before the first step
  std::vector<double> epoch_kl;     // training-set KL after each epoch
  std::size_t steps = 0;
};

/// Trains the backbone against the ground scene and image distributions
/// through two softmax projections, discards them and freezes the backbone.
PretrainResult pretrain_backbone(ModelState model, const std::vector<GeoRecord>& train,
                                 const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  NllReport train;
  std::optional<NllReport> val;
};

struct TrainResult {
  ModelState model;
  std::vector<EpochRecord> history;
  std::size_t steps = 0;
};

/// Mini-batch Adam on the summed head NLLs. Requires a frozen backbone.
TrainResult train_heads(ModelState model, const std::vector<GeoRecord>& train,
                        const std::vector<GeoRecord>& val, const TrainConfig& config);

}  // namespace crossview
