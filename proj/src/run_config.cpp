#include "crossview/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace crossview {

namespace {

using nlohmann::json;

class ConfigReader {
 public:
  ConfigReader(const json& obj, std::string section) : obj_(obj), section_(std::move(section)) {
    if (!obj_.is_object()) throw std::invalid_argument("config: '" + section_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      target = it->get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config: key '" + path(key) + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const {
    return section_.empty() ? key : section_ + "." + key;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw std::invalid_argument("config: unknown key '" + path(it.key()) + "'");
    }
  }

 private:
  const json& obj_;
  std::string section_;
  std::set<std::string> seen_;
};

void read_world(const json& j, WorldConfig& w) {
  ConfigReader r(j, "world");
  r.read("num_classes", w.num_classes);
  r.read("num_records", w.num_records);
  r.read("feature_dim", w.feature_dim);
  r.read("scene_dim", w.scene_dim);
  r.read("image_dim", w.image_dim);
  r.read("count_dim", w.count_dim);
  r.read("feature_noise_sigma", w.feature_noise_sigma);
  r.read("class_alpha_scale", w.class_alpha_scale);
  r.read("count_rate_scale", w.count_rate_scale);
  r.read("location_spread", w.location_spread);
  if (const json* box = r.child("geo_extent")) {
    ConfigReader b(*box, "world.geo_extent");
    b.read("lat_min", w.geo_extent.lat_min);
    b.read("lat_max", w.geo_extent.lat_max);
    b.read("lon_min", w.geo_extent.lon_min);
    b.read("lon_max", w.geo_extent.lon_max);
    b.finish();
  }
  r.finish();
}

void read_train(const json& j, TrainConfig& t) {
  ConfigReader r(j, "train");
  r.read("epochs", t.epochs);
  r.read("pretrain_epochs", t.pretrain_epochs);
  r.read("batch_size", t.batch_size);
  r.read("lr", t.lr);
  r.read("weight_decay", t.weight_decay);
  std::string mode = t.decay_mode == WeightDecayMode::coupled ? "coupled" : "decoupled";
  r.read("weight_decay_mode", mode);
  if (mode == "coupled") {
    t.decay_mode = WeightDecayMode::coupled;
  } else if (mode == "decoupled") {
    t.decay_mode = WeightDecayMode::decoupled;
  } else {
    throw std::invalid_argument("config: train.weight_decay_mode must be 'coupled' or 'decoupled'");
  }
  r.read("beta1", t.beta1);
  r.read("beta2", t.beta2);
  r.read("eps_hat", t.eps_hat);
  std::vector<double> weights(t.head_weights.begin(), t.head_weights.end());
  r.read("head_loss_weights", weights);
  if (weights.size() != kNumHeads) {
    throw std::invalid_argument("config: train.head_loss_weights needs exactly 3 values");
  }
  std::copy(weights.begin(), weights.end(), t.head_weights.begin());
  r.read("simplex_eps", t.simplex_eps);
  r.read("feature_jitter", t.feature_jitter);
  r.read("shuffle", t.shuffle);
  r.finish();
}

}  // namespace

StageSeeds stage_seeds(std::uint64_t seed) {
  return {derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3), derive_seed(seed, 4),
          derive_seed(seed, 5)};
}

ModelConfig model_config(const RunConfig& c) {
  ModelConfig m = c.model;
  m.input_dim = c.world.feature_dim;
  m.scene_dim = c.world.scene_dim;
  m.image_dim = c.world.image_dim;
  m.count_dim = c.world.count_dim;
  return m;
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  ConfigReader r(j, "");
  r.read("seed", c.seed);
  std::string out_dir = c.out_dir.string();
  r.read("out_dir", out_dir);
  c.out_dir = out_dir;
  if (const json* w = r.child("world")) read_world(*w, c.world);
  if (const json* s = r.child("split")) {
    ConfigReader sr(*s, "split");
    sr.read("train", c.split.train);
    sr.read("val", c.split.val);
    sr.read("test", c.split.test);
    sr.finish();
  }
  if (const json* m = r.child("model")) {
    ConfigReader mr(*m, "model");
    mr.read("backbone_widths", c.model.backbone_widths);
    mr.read("head_hidden", c.model.head_hidden);
    mr.read("link_floor", c.model.link_floor);
    mr.finish();
  }
  if (const json* t = r.child("train")) read_train(*t, c.train);
  if (const json* e = r.child("eval")) {
    ConfigReader er(*e, "eval");
    er.read("thresholds", c.thresholds);
    er.read("heatmap_rows", c.heatmap_rows);
    er.read("heatmap_cols", c.heatmap_cols);
    er.finish();
  }
  r.finish();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
  const WorldConfig& w = c.world;
  const TrainConfig& t = c.train;
  json j{
      {"seed", c.seed},
      {"out_dir", c.out_dir.string()},
      {"world",
       {{"num_classes", w.num_classes},
        {"num_records", w.num_records},
        {"feature_dim", w.feature_dim},
        {"scene_dim", w.scene_dim},
        {"image_dim", w.image_dim},
        {"count_dim", w.count_dim},
        {"feature_noise_sigma", w.feature_noise_sigma},
        {"class_alpha_scale", w.class_alpha_scale},
        {"count_rate_scale", w.count_rate_scale},
        {"location_spread", w.location_spread},
        {"geo_extent",
         {{"lat_min", w.geo_extent.lat_min},
          {"lat_max", w.geo_extent.lat_max},
          {"lon_min", w.geo_extent.lon_min},
          {"lon_max", w.geo_extent.lon_max}}}}},
      {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}},
      {"model",
       {{"backbone_widths", c.model.backbone_widths},
        {"head_hidden", c.model.head_hidden},
        {"link_floor", c.model.link_floor}}},
      {"train",
       {{"epochs", t.epochs},
        {"pretrain_epochs", t.pretrain_epochs},
        {"batch_size", t.batch_size},
        {"lr", t.lr},
        {"weight_decay", t.weight_decay},
        {"weight_decay_mode", t.decay_mode == WeightDecayMode::coupled ? "coupled" : "decoupled"},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"eps_hat", t.eps_hat},
        {"head_loss_weights", t.head_weights},
        {"simplex_eps", t.simplex_eps},
        {"feature_jitter", t.feature_jitter},
        {"shuffle", t.shuffle}}},
      {"eval",
       {{"thresholds", c.thresholds},
        {"heatmap_rows", c.heatmap_rows},
        {"heatmap_cols", c.heatmap_cols}}}};
  return j.dump(2);
}

}  // namespace crossview
