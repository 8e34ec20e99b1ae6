#include "crossview/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace crossview {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                std::to_string(got) + ", expected " + std::to_string(want) + ")");
  }
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

void dense_forward(const DenseLayer& layer, std::span<const double> x, std::vector<double>& pre,
                 std::vector<double>& out) {
  const std::size_t n_out = layer.out_dim();
  const std::size_t n_in = layer.in_dim();
  pre.assign(n_out, 0.0);
  out.assign(n_out, 0.0);
  for (std::size_t r = 0; r < n_out; ++r) {
    const double* w = layer.weights.data.data() + r * n_in;
    double acc = layer.bias[r];
    for (std::size_t c = 0; c < n_in; ++c) acc += w[c] * x[c];
    pre[r] = acc;
    out[r] = (layer.activation == Activation::relu && acc <= 0.0) ? 0.0 : acc;
  }
}

void dense_backward(const DenseLayer& layer, std::span<const double> input,
                    std::span<const double> d_pre, DenseLayer& grad,
                    std::vector<double>* d_input) {
  const std::size_t n_out = layer.out_dim();
  const std::size_t n_in = layer.in_dim();
  for (std::size_t r = 0; r < n_out; ++r) {
    const double g = d_pre[r];
    grad.bias[r] += g;
    double* gw = grad.weights.data.data() + r * n_in;
    for (std::size_t c = 0; c < n_in; ++c) gw[c] += g * input[c];
  }
  if (d_input != nullptr) {
    d_input->assign(n_in, 0.0);
    for (std::size_t r = 0; r < n_out; ++r) {
      const double g = d_pre[r];
      const double* w = layer.weights.data.data() + r * n_in;
      for (std::size_t c = 0; c < n_in; ++c) (*d_input)[c] += w[c] * g;
    }
  }
}

namespace {

std::vector<double> scale_input(const ModelState& model, std::span<const double> feature) {
  require_dim(feature.size(), model.input_dim(), "forward");
  std::vector<double> x(feature.begin(), feature.end());
  if (!model.scaler.mean.empty()) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = (x[i] - model.scaler.mean[i]) * model.scaler.inv_std[i];
    }
  }
  return x;
}

struct HeadTrace {
  std::vector<double> hidden_pre, hidden_out, out_pre, out_identity;
  std::vector<double> params;
};

struct Trace {
  BackboneTrace backbone;
  std::array<HeadTrace, kNumHeads> heads;
};

BackboneTrace run_backbone(const ModelState& model, std::span<const double> feature) {
  BackboneTrace t;
  t.activations.reserve(model.backbone.size() + 1);
  t.activations.push_back(scale_input(model, feature));
  t.pre_activations.resize(model.backbone.size());
  for (std::size_t l = 0; l < model.backbone.size(); ++l) {
    std::vector<double> out;
    dense_forward(model.backbone[l], t.activations.back(), t.pre_activations[l], out);
    t.activations.push_back(std::move(out));
  }
  return t;
}

Trace run_forward(const ModelState& model, std::span<const double> feature) {
  Trace t;
  t.backbone = run_backbone(model, feature);
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    const PredictionHead& head = model.heads[h];
    HeadTrace& ht = t.heads[h];
    dense_forward(head.hidden, t.backbone.embedding(), ht.hidden_pre, ht.hidden_out);
    dense_forward(head.output, ht.hidden_out, ht.out_pre, ht.out_identity);
    ht.params = softplus_link(ht.out_pre, model.link_floor);
  }
  return t;
}

Prediction to_prediction(Trace& t) {
  Prediction p;
  p.scene.alpha = std::move(t.heads[0].params);
  p.image.alpha = std::move(t.heads[1].params);
  p.counts.lambda = std::move(t.heads[2].params);
  return p;
}

void zero_layer(DenseLayer& layer) {
  std::fill(layer.weights.data.begin(), layer.weights.data.end(), 0.0);
  std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

}  // namespace

const char* head_name(Head head) {
  switch (head) {
    case Head::scene: return "scene";
    case Head::image: return "image";
    case Head::counts: return "counts";
  }
  return "unknown";
}

Head parse_head(const std::string& name) {
  if (name == "scene") return Head::scene;
  if (name == "image") return Head::image;
  if (name == "counts") return Head::counts;
  throw std::invalid_argument("unknown head '" + name + "' (expected scene, image or counts)");
}

std::size_t ModelState::input_dim() const {
  return backbone.empty() ? heads[0].hidden.in_dim() : backbone.front().in_dim();
}

std::size_t ModelState::feature_dim() const {
  return backbone.empty() ? heads[0].hidden.in_dim() : backbone.back().out_dim();
}

std::size_t ModelState::output_dim(Head h) const { return head(h).output.out_dim(); }

DenseLayer xavier_init(std::size_t out_dim, std::size_t in_dim, Rng& rng, Activation activation) {
  if (out_dim == 0 || in_dim == 0) {
    throw std::invalid_argument("xavier_init: dimensions must be positive");
  }
  DenseLayer layer;
  layer.weights = Matrix(out_dim, in_dim);
  layer.bias.assign(out_dim, 0.0);
  layer.activation = activation;
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (double& w : layer.weights.data) w = rng.uniform(-limit, limit);
  return layer;
}

ModelState make_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.input_dim == 0 || config.head_hidden == 0 || config.scene_dim < 2 ||
      config.image_dim < 2 || config.count_dim == 0) {
    throw std::invalid_argument("make_model: invalid dimensions");
  }
  if (!(config.link_floor > 0.0)) throw std::invalid_argument("make_model: link floor must be > 0");
  Rng rng(seed);
  ModelState model;
  model.link_floor = config.link_floor;
  model.seeds.init = seed;
  std::size_t width = config.input_dim;
  for (std::size_t w : config.backbone_widths) {
    model.backbone.push_back(xavier_init(w, width, rng, Activation::relu));
    width = w;
  }
  const std::array<std::size_t, kNumHeads> outs{config.scene_dim, config.image_dim,
                                                config.count_dim};
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    model.heads[h].hidden = xavier_init(config.head_hidden, width, rng, Activation::relu);
    model.heads[h].output = xavier_init(outs[h], config.head_hidden, rng, Activation::identity);
  }
  return model;
}

ModelState zeros_like(const ModelState& model) {
  ModelState z = model;
  for (auto& layer : z.backbone) zero_layer(layer);
  for (auto& head : z.heads) {
    zero_layer(head.hidden);
    zero_layer(head.output);
  }
  return z;
}

double softplus(double z, double floor) {
  if (z > 30.0) return z + floor;
  return std::log1p(std::exp(z)) + floor;
}

std::vector<double> softplus_link(std::span<const double> z, double floor) {
  std::vector<double> out;
  out.reserve(z.size());
  for (double v : z) out.push_back(softplus(v, floor));
  return out;
}

std::vector<double> embed(const ModelState& model, std::span<const double> feature) {
  std::vector<double> x = scale_input(model, feature);
  std::vector<double> pre, out;
  for (const auto& layer : model.backbone) {
    dense_forward(layer, x, pre, out);
    x.swap(out);
  }
  return x;
}

BackboneTrace embed_with_trace(const ModelState& model, std::span<const double> feature) {
  return run_backbone(model, feature);
}

void backbone_backward(const ModelState& model, const BackboneTrace& trace,
                       std::span<const double> d_embedding, ModelState& grads) {
  std::vector<double> d_feature(d_embedding.begin(), d_embedding.end());
  std::vector<double> d_input;
  for (std::size_t l = model.backbone.size(); l-- > 0;) {
    for (std::size_t i = 0; i < d_feature.size(); ++i) {
      if (!(trace.pre_activations[l][i] > 0.0)) d_feature[i] = 0.0;
    }
    std::vector<double>* d_in = l > 0 ? &d_input : nullptr;
    dense_backward(model.backbone[l], trace.activations[l], d_feature, grads.backbone[l], d_in);
    if (d_in != nullptr) d_feature.swap(d_input);
  }
}

Prediction forward(const ModelState& model, std::span<const double> feature) {
  Trace t = run_forward(model, feature);
  return to_prediction(t);
}

std::array<double, kNumHeads> sample_nll(const Prediction& prediction, const GroundSample& ground,
                                         double simplex_eps) {
  return {-dirichlet_log_pdf(prediction.scene, smooth_simplex(ground.scene_dist.p, simplex_eps)),
          -dirichlet_log_pdf(prediction.image, smooth_simplex(ground.image_dist.p, simplex_eps)),
          -poisson_log_pmf(prediction.counts, ground.counts)};
}

BackwardResult backward(const ModelState& model, std::span<const Example> batch,
                        const LossOptions& options) {
  if (batch.empty()) throw std::invalid_argument("backward: empty batch");
  BackwardResult result;
  result.gradients = zeros_like(model);
  ModelState& grads = result.gradients;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  std::vector<double> d_out, d_hidden, d_feature, d_act;
  for (const Example& ex : batch) {
    require_dim(ex.ground->scene_dist.p.size(), model.output_dim(Head::scene), "backward scene");
    require_dim(ex.ground->image_dist.p.size(), model.output_dim(Head::image), "backward image");
    require_dim(ex.ground->counts.k.size(), model.output_dim(Head::counts), "backward counts");

    Trace t = run_forward(model, *ex.feature);
    const std::vector<double>& embedding = t.backbone.embedding();

    const SimplexVector scene = smooth_simplex(ex.ground->scene_dist.p, options.simplex_eps);
    const SimplexVector image = smooth_simplex(ex.ground->image_dist.p, options.simplex_eps);
    const DirichletParams scene_params{t.heads[0].params};
    const DirichletParams image_params{t.heads[1].params};
    const PoissonParams count_params{t.heads[2].params};

    const std::array<double, kNumHeads> nll{-dirichlet_log_pdf(scene_params, scene),
                                            -dirichlet_log_pdf(image_params, image),
                                            -poisson_log_pmf(count_params, ex.ground->counts)};
    const std::array<std::vector<double>, kNumHeads> d_params{
        dirichlet_nll_grad(scene_params, scene), dirichlet_nll_grad(image_params, image),
        poisson_nll_grad(count_params, ex.ground->counts)};

    d_feature.assign(embedding.size(), 0.0);
    for (std::size_t h = 0; h < kNumHeads; ++h) {
      result.head_nll[h] += nll[h] * inv_n;
      result.loss += options.head_weights[h] * nll[h] * inv_n;

      const PredictionHead& head = model.heads[h];
      PredictionHead& ghead = grads.heads[h];
      const HeadTrace& ht = t.heads[h];
      const double scale = options.head_weights[h] * inv_n;

      d_out.resize(ht.out_pre.size());
      for (std::size_t i = 0; i < d_out.size(); ++i) {
        d_out[i] = scale * d_params[h][i] * sigmoid(ht.out_pre[i]);
      }
      dense_backward(head.output, ht.hidden_out, d_out, ghead.output, &d_hidden);
      for (std::size_t i = 0; i < d_hidden.size(); ++i) {
        if (!(ht.hidden_pre[i] > 0.0)) d_hidden[i] = 0.0;
      }
      std::vector<double>* d_in = model.backbone_frozen || model.backbone.empty() ? nullptr : &d_act;
      dense_backward(head.hidden, embedding, d_hidden, ghead.hidden, d_in);
      if (d_in != nullptr) {
        for (std::size_t i = 0; i < d_feature.size(); ++i) d_feature[i] += d_act[i];
      }
    }

    if (!model.backbone_frozen) backbone_backward(model, t.backbone, d_feature, grads);
  }
  return result;
}

std::vector<ParamBlock> parameter_blocks(ModelState& model) {
  std::vector<ParamBlock> blocks;
  for (auto& layer : model.backbone) {
    blocks.push_back({layer.weights.data, true});
    blocks.push_back({layer.bias, true});
  }
  for (auto& head : model.heads) {
    blocks.push_back({head.hidden.weights.data, false});
    blocks.push_back({head.hidden.bias, false});
    blocks.push_back({head.output.weights.data, false});
    blocks.push_back({head.output.bias, false});
  }
  return blocks;
}

std::vector<std::span<const double>> parameter_views(const ModelState& model) {
  std::vector<std::span<const double>> views;
  for (const auto& block : parameter_blocks(const_cast<ModelState&>(model))) {
    views.emplace_back(block.values);
  }
  return views;
}

AdamState make_adam(const AdamConfig& config, std::span<const std::size_t> block_sizes) {
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    throw std::invalid_argument("make_adam: betas must lie in [0, 1)");
  }
  if (!(config.lr >= 0.0)) throw std::invalid_argument("make_adam: lr must be >= 0");
  AdamState state;
  state.config = config;
  for (std::size_t n : block_sizes) {
    state.first_moment.emplace_back(n, 0.0);
    state.second_moment.emplace_back(n, 0.0);
  }
  return state;
}

AdamState make_adam(const AdamConfig& config, const ModelState& model) {
  std::vector<std::size_t> sizes;
  for (const auto& view : parameter_views(model)) sizes.push_back(view.size());
  return make_adam(config, sizes);
}

void adam_update(AdamState& state, std::span<const std::span<double>> params,
                 std::span<const std::span<const double>> grads, const std::vector<bool>& trainable) {
  if (params.size() != grads.size() || params.size() != trainable.size() ||
      params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_update: block count mismatch");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() || params[b].size() != state.first_moment[b].size()) {
      throw std::invalid_argument("adam_update: shape mismatch in block " + std::to_string(b));
    }
  }
  const AdamConfig& c = state.config;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (!trainable[b]) continue;
    std::span<double> theta = params[b];
    std::span<const double> g = grads[b];
    std::vector<double>& m = state.first_moment[b];
    std::vector<double>& v = state.second_moment[b];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double gi = g[i];
      if (c.decay_mode == WeightDecayMode::coupled) gi += c.weight_decay * theta[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      double updated = theta[i] - c.lr * m_hat / (std::sqrt(v_hat) + c.eps_hat);
      if (c.decay_mode == WeightDecayMode::decoupled) updated -= c.lr * c.weight_decay * theta[i];
      theta[i] = updated;
    }
  }
}

void adam_step(AdamState& state, ModelState& model, const ModelState& gradients) {
  std::vector<ParamBlock> blocks = parameter_blocks(model);
  std::vector<std::span<const double>> grads = parameter_views(gradients);
  if (grads.size() != blocks.size()) throw std::invalid_argument("adam_step: shape mismatch");
  std::vector<std::span<double>> params;
  std::vector<bool> trainable;
  for (const auto& block : blocks) {
    params.push_back(block.values);
    trainable.push_back(!(block.backbone && model.backbone_frozen));
  }
  adam_update(state, params, grads, trainable);
}

}  // namespace crossview
