#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crossview/distributions.hpp"
#include "crossview/ground.hpp"
#include "crossview/random.hpp"

namespace crossview {

enum class Activation { relu, identity };

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::relu;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// The three prediction heads, in storage order.
enum class Head : std::size_t { scene = 0, image = 1, counts = 2 };
inline constexpr std::size_t kNumHeads = 3;
inline constexpr std::array<Head, kNumHeads> kAllHeads{Head::scene, Head::image, Head::counts};

const char* head_name(Head head);
/// Parses "scene", "image" or "counts"; throws std::invalid_argument otherwise.
Head parse_head(const std::string& name);

/// Two fully connected layers: dense+relu then dense+identity.
struct PredictionHead {
  DenseLayer hidden;
  DenseLayer output;
  friend bool operator==(const PredictionHead&, const PredictionHead&) = default;
};

/// Per-dimension standardization applied to inputs before the backbone.
/// Empty vectors mean identity.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> inv_std;
  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

struct SeedLineage {
  std::uint64_t init = 0;
  std::uint64_t pretrain = 0;
  std::uint64_t train = 0;
  friend bool operator==(const SeedLineage&, const SeedLineage&) = default;
};

struct ModelConfig {
  std::size_t input_dim = 32;
  std::vector<std::size_t> backbone_widths{128, 128, 128};
  std::size_t head_hidden = 1024;
  std::size_t scene_dim = 365;
  std::size_t image_dim = 1000;
  std::size_t count_dim = 91;
  double link_floor = 1e-6;
};

struct ModelState {
  std::vector<DenseLayer> backbone;
  std::array<PredictionHead, kNumHeads> heads;
  bool backbone_frozen = false;
  FeatureScaler scaler;
  double link_floor = 1e-6;
  SeedLineage seeds;

  std::size_t input_dim() const;
  std::size_t feature_dim() const;  // backbone output width
  std::size_t output_dim(Head head) const;

  PredictionHead& head(Head h) { return heads[static_cast<std::size_t>(h)]; }
  const PredictionHead& head(Head h) const { return heads[static_cast<std::size_t>(h)]; }

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Predicted distribution parameters for one overhead feature.
struct Prediction {
  DirichletParams scene;
  DirichletParams image;
  PoissonParams counts;
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Glorot-uniform weights on +-sqrt(6 / (in + out)), zero bias.
DenseLayer xavier_init(std::size_t out_dim, std::size_t in_dim, Rng& rng,
                       Activation activation = Activation::relu);

/// Builds a model with every layer Xavier-initialized from `seed`.
ModelState make_model(const ModelConfig& config, std::uint64_t seed);

/// Copy of `model` with every parameter set to zero. Used as the gradient container.
ModelState zeros_like(const ModelState& model);

/// ln(1 + e^z) + floor, using z + floor for z > 30.
double softplus(double z, double floor);
std::vector<double> softplus_link(std::span<const double> z, double floor);

/// Applies the scaler and the backbone stack.
std::vector<double> embed(const ModelState& model, std::span<const double> feature);

/// Backbone activations kept for backprop. activations[0] is the scaled
/// input, activations[l + 1] the output of backbone layer l.
struct BackboneTrace {
  std::vector<std::vector<double>> activations;
  std::vector<std::vector<double>> pre_activations;
  const std::vector<double>& embedding() const { return activations.back(); }
};
BackboneTrace embed_with_trace(const ModelState& model, std::span<const double> feature);

/// Accumulates backbone gradients into `grads` given dL/d(embedding).
/// Does not consult the frozen flag.
void backbone_backward(const ModelState& model, const BackboneTrace& trace,
                       std::span<const double> d_embedding, ModelState& grads);

/// out = activation(W x + b); `pre` receives W x + b.
void dense_forward(const DenseLayer& layer, std::span<const double> x, std::vector<double>& pre,
                   std::vector<double>& out);
/// Adds dL/dW and dL/db to `grad` for a given dL/d(pre); writes dL/dx when
/// `d_input` is non-null.
void dense_backward(const DenseLayer& layer, std::span<const double> input,
                    std::span<const double> d_pre, DenseLayer& grad, std::vector<double>* d_input);

Prediction forward(const ModelState& model, std::span<const double> feature);

struct Example {
  const FeatureVector* feature = nullptr;
  const GroundSample* ground = nullptr;
};

using HeadWeights = std::array<double, kNumHeads>;

struct LossOptions {
  HeadWeights head_weights{1.0, 1.0, 1.0};
  double simplex_eps = kDefaultSimplexEps;
};

/// Per-sample negative log-likelihood of each head.
std::array<double, kNumHeads> sample_nll(const Prediction& prediction, const GroundSample& ground,
                                         double simplex_eps = kDefaultSimplexEps);

struct BackwardResult {
  ModelState gradients;
  double loss = 0.0;
  std::array<double, kNumHeads> head_nll{};  // batch means, unweighted
};

/// Loss = sum_h w_h * mean_n NLL_h(n) and its exact gradient. Backbone
/// gradients are left at zero when the backbone is frozen.
BackwardResult backward(const ModelState& model, std::span<const Example> batch,
                        const LossOptions& options = {});

/// Mutable view of every parameter array in a fixed order: backbone layers
/// (weights, bias) first, then each head's hidden and output layers.
struct ParamBlock {
  std::span<double> values;
  bool backbone = false;
};
std::vector<ParamBlock> parameter_blocks(ModelState& model);
std::vector<std::span<const double>> parameter_views(const ModelState& model);

enum class WeightDecayMode { coupled, decoupled };

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  double weight_decay = 0.0;
  WeightDecayMode decay_mode = WeightDecayMode::coupled;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// Zeroed moments shaped like `block_sizes`.
AdamState make_adam(const AdamConfig& config, std::span<const std::size_t> block_sizes);
AdamState make_adam(const AdamConfig& config, const ModelState& model);

/// One Adam update over arbitrary parameter blocks. Blocks with
/// trainable[i] == false are skipped entirely (values and moments).
void adam_update(AdamState& state, std::span<const std::span<double>> params,
                 std::span<const std::span<const double>> grads, const std::vector<bool>& trainable);

/// Adam step on a model; the backbone is untouched when frozen.
void adam_step(AdamState& state, ModelState& model, const ModelState& gradients);

}  // namespace crossview
