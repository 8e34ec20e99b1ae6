#include "crossview/training.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace crossview {

namespace {

constexpr std::uint64_t kProjectionStream = 101;
constexpr std::uint64_t kPretrainShuffleStream = 102;
constexpr std::uint64_t kHeadShuffleStream = 103;
constexpr std::uint64_t kJitterStream = 104;

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }
  return order;
}

// KL(p || softmax(z)) and, when `d_logits` is non-null, its gradient
// softmax(z) - p with respect to z.
double softmax_kl(std::span<const double> p, std::span<const double> z,
                  std::vector<double>* d_logits) {
  double max_z = z[0];
  for (double v : z) max_z = std::max(max_z, v);
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - max_z);
  const double lse = max_z + std::log(sum);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * (std::log(p[i]) - (z[i] - lse));
  }
  if (d_logits != nullptr) {
    d_logits->resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) (*d_logits)[i] = std::exp(z[i] - lse) - p[i];
  }
  return kl;
}

void zero(DenseLayer& layer) {
  std::fill(layer.weights.data.begin(), layer.weights.data.end(), 0.0);
  std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

void check_dims(const ModelState& model, const GeoRecord& r) {
  if (r.feature.size() != model.input_dim() ||
      r.ground.scene_dist.p.size() != model.output_dim(Head::scene) ||
      r.ground.image_dist.p.size() != model.output_dim(Head::image) ||
      r.ground.counts.k.size() != model.output_dim(Head::counts)) {
    throw std::invalid_argument("record " + std::to_string(r.id) +
                                " does not match the model dimensions");
  }
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (c.pretrain_epochs < 0) throw std::invalid_argument("train config: pretrain_epochs must be >= 0");
  if (c.batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (!(c.lr >= 0.0)) throw std::invalid_argument("train config: lr must be >= 0");
  if (!(c.weight_decay >= 0.0)) throw std::invalid_argument("train config: weight_decay must be >= 0");
  if (!(c.simplex_eps > 0.0)) throw std::invalid_argument("train config: simplex_eps must be > 0");
  if (!(c.feature_jitter >= 0.0)) throw std::invalid_argument("train config: feature_jitter must be >= 0");
  for (double w : c.head_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("train config: head weights must be >= 0");
  }
}

AdamConfig adam_config(const TrainConfig& c) {
  return AdamConfig{c.lr, c.beta1, c.beta2, c.eps_hat, c.weight_decay, c.decay_mode};
}

FeatureScaler fit_scaler(const std::vector<GeoRecord>& records) {
  if (records.empty()) throw std::invalid_argument("fit_scaler: no records");
  const std::size_t d = records.front().feature.size();
  FeatureScaler s;
  s.mean.assign(d, 0.0);
  s.inv_std.assign(d, 0.0);
  for (const auto& r : records) {
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += r.feature[i];
  }
  const double n = static_cast<double>(records.size());
  for (double& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& r : records) {
    for (std::size_t i = 0; i < d; ++i) {
      const double dev = r.feature[i] - s.mean[i];
      var[i] += dev * dev;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double sd = std::sqrt(var[i] / n);
    s.inv_std[i] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return s;
}

NllReport evaluate_nll(const ModelState& model, const std::vector<GeoRecord>& records,
                       const HeadWeights& head_weights, double simplex_eps) {
  if (records.empty()) throw std::invalid_argument("evaluate_nll: no records");
  std::array<double, kNumHeads> sums{};
  for (const auto& r : records) {
    check_dims(model, r);
    const auto nll = sample_nll(forward(model, r.feature), r.ground, simplex_eps);
    for (std::size_t h = 0; h < kNumHeads; ++h) sums[h] += nll[h];
  }
  const double n = static_cast<double>(records.size());
  NllReport report{sums[0] / n, sums[1] / n, sums[2] / n, 0.0};
  report.total = head_weights[0] * report.scene + head_weights[1] * report.image +
                 head_weights[2] * report.counts;
  return report;
}

double pretrain_kl(const ModelState& model, const PretrainProjections& proj,
                   const std::vector<GeoRecord>& records) {
  if (records.empty()) throw std::invalid_argument("pretrain_kl: no records");
  double total = 0.0;
  std::vector<double> pre, z;
  for (const auto& r : records) {
    const std::vector<double> e = embed(model, r.feature);
    dense_forward(proj.scene, e, pre, z);
    total += softmax_kl(r.ground.scene_dist.p, z, nullptr);
    dense_forward(proj.image, e, pre, z);
    total += softmax_kl(r.ground.image_dist.p, z, nullptr);
  }
  return total / static_cast<double>(records.size());
}

PretrainResult pretrain_backbone(ModelState model, const std::vector<GeoRecord>& train,
                                 const TrainConfig& config) {
  validate(config);
  if (train.empty()) throw std::invalid_argument("pretrain_backbone: empty training set");
  if (model.backbone_frozen) throw std::invalid_argument("pretrain_backbone: backbone is already frozen");
  for (const auto& r : train) check_dims(model, r);

  Rng init_rng(derive_seed(config.seed, kProjectionStream));
  PretrainProjections proj{
      xavier_init(model.output_dim(Head::scene), model.feature_dim(), init_rng, Activation::identity),
      xavier_init(model.output_dim(Head::image), model.feature_dim(), init_rng, Activation::identity)};

  PretrainResult result;
  result.initial_kl = pretrain_kl(model, proj, train);

  std::vector<std::span<double>> params;
  for (auto& block : parameter_blocks(model)) {
    if (block.backbone) params.push_back(block.values);
  }
  const std::size_t n_backbone_blocks = params.size();
  for (DenseLayer* layer : {&proj.scene, &proj.image}) {
    params.emplace_back(layer->weights.data);
    params.emplace_back(layer->bias);
  }
  std::vector<std::size_t> sizes;
  for (const auto& p : params) sizes.push_back(p.size());
  AdamState adam = make_adam(adam_config(config), sizes);
  const std::vector<bool> trainable(params.size(), true);

  ModelState grads = zeros_like(model);
  PretrainProjections proj_grads = proj;
  std::vector<double> pre, z, d_scene, d_image, d_embed, d_tmp;

  for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    const auto order = epoch_order(train.size(), config.shuffle,
                                   derive_seed(derive_seed(config.seed, kPretrainShuffleStream),
                                               static_cast<std::uint64_t>(epoch)));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv_n = 1.0 / static_cast<double>(end - start);
      grads = zeros_like(model);
      zero(proj_grads.scene);
      zero(proj_grads.image);
      for (std::size_t b = start; b < end; ++b) {
        const GeoRecord& r = train[order[b]];
        const BackboneTrace trace = embed_with_trace(model, r.feature);
        const auto& e = trace.embedding();
        dense_forward(proj.scene, e, pre, z);
        softmax_kl(r.ground.scene_dist.p, z, &d_scene);
        dense_forward(proj.image, e, pre, z);
        softmax_kl(r.ground.image_dist.p, z, &d_image);
        for (double& v : d_scene) v *= inv_n;
        for (double& v : d_image) v *= inv_n;
        dense_backward(proj.scene, e, d_scene, proj_grads.scene, &d_embed);
        dense_backward(proj.image, e, d_image, proj_grads.image, &d_tmp);
        for (std::size_t i = 0; i < d_embed.size(); ++i) d_embed[i] += d_tmp[i];
        backbone_backward(model, trace, d_embed, grads);
      }
      std::vector<std::span<const double>> grad_views;
      for (const auto& view : parameter_views(grads)) {
        if (grad_views.size() < n_backbone_blocks) grad_views.push_back(view);
      }
      for (const DenseLayer* layer : {&proj_grads.scene, &proj_grads.image}) {
        grad_views.emplace_back(layer->weights.data);
        grad_views.emplace_back(layer->bias);
      }
      adam_update(adam, params, grad_views, trainable);
      ++result.steps;
    }
    result.epoch_kl.push_back(pretrain_kl(model, proj, train));
  }

  model.backbone_frozen = true;
  model.seeds.pretrain = config.seed;
  result.model = std::move(model);
  return result;
}

TrainResult train_heads(ModelState model, const std::vector<GeoRecord>& train,
                        const std::vector<GeoRecord>& val, const TrainConfig& config) {
  validate(config);
  if (!model.backbone_frozen) {
    throw std::invalid_argument("train_heads: backbone must be frozen (run pretraining first)");
  }
  if (train.empty()) throw std::invalid_argument("train_heads: empty training set");
  for (const auto& r : train) check_dims(model, r);
  for (const auto& r : val) check_dims(model, r);

  AdamState adam = make_adam(adam_config(config), model);
  const LossOptions loss{config.head_weights, config.simplex_eps};
  Rng jitter_rng(derive_seed(config.seed, kJitterStream));
  TrainResult result;
  std::vector<Example> batch;
  std::vector<FeatureVector> jittered;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(train.size(), config.shuffle,
                                   derive_seed(derive_seed(config.seed, kHeadShuffleStream),
                                               static_cast<std::uint64_t>(epoch)));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      jittered.clear();
      jittered.reserve(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const GeoRecord& r = train[order[b]];
        if (config.feature_jitter > 0.0) {
          jittered.push_back(r.feature);
          for (double& v : jittered.back()) v += config.feature_jitter * jitter_rng.normal();
          batch.push_back({&jittered.back(), &r.ground});
        } else {
          batch.push_back({&r.feature, &r.ground});
        }
      }
      const BackwardResult step = backward(model, batch, loss);
      adam_step(adam, model, step.gradients);
      ++result.steps;
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train = evaluate_nll(model, train, config.head_weights, config.simplex_eps);
    if (!val.empty()) rec.val = evaluate_nll(model, val, config.head_weights, config.simplex_eps);
    result.history.push_back(rec);
  }
  model.seeds.train = config.seed;
  result.model = std::move(model);
  return result;
}

}  // namespace crossview
