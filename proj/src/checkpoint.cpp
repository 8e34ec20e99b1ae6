#include "crossview/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace crossview {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "crossview-checkpoint";
constexpr int kVersion = 1;

json layer_to_json(const DenseLayer& layer) {
  return json{{"in", layer.in_dim()},
              {"out", layer.out_dim()},
              {"activation", layer.activation == Activation::relu ? "relu" : "identity"},
              {"weights", layer.weights.data},
              {"bias", layer.bias}};
}

DenseLayer layer_from_json(const json& j, const std::string& where) {
  DenseLayer layer;
  const auto in = j.at("in").get<std::size_t>();
  const auto out = j.at("out").get<std::size_t>();
  const auto act = j.at("activation").get<std::string>();
  if (act == "relu") {
    layer.activation = Activation::relu;
  } else if (act == "identity") {
    layer.activation = Activation::identity;
  } else {
    throw std::runtime_error("checkpoint: " + where + ": unknown activation '" + act + "'");
  }
  layer.weights.rows = out;
  layer.weights.cols = in;
  layer.weights.data = j.at("weights").get<std::vector<double>>();
  layer.bias = j.at("bias").get<std::vector<double>>();
  if (layer.weights.data.size() != in * out || layer.bias.size() != out) {
    throw std::runtime_error("checkpoint: " + where + ": parameter array size does not match " +
                             std::to_string(out) + "x" + std::to_string(in));
  }
  return layer;
}

}  // namespace

void save_checkpoint(const ModelState& model, const std::filesystem::path& path) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["dims"] = {{"input", model.input_dim()},
               {"feature", model.feature_dim()},
               {"head_hidden", model.heads[0].hidden.out_dim()},
               {"scene", model.output_dim(Head::scene)},
               {"image", model.output_dim(Head::image)},
               {"counts", model.output_dim(Head::counts)}};
  j["link_floor"] = model.link_floor;
  j["backbone_frozen"] = model.backbone_frozen;
  j["scaler"] = {{"mean", model.scaler.mean}, {"inv_std", model.scaler.inv_std}};
  j["seeds"] = {{"init", model.seeds.init},
                {"pretrain", model.seeds.pretrain},
                {"train", model.seeds.train}};
  json backbone = json::array();
  for (const auto& layer : model.backbone) backbone.push_back(layer_to_json(layer));
  j["backbone"] = std::move(backbone);
  json heads = json::object();
  for (Head h : kAllHeads) {
    const PredictionHead& head = model.head(h);
    heads[head_name(h)] = {{"hidden", layer_to_json(head.hidden)},
                           {"output", layer_to_json(head.output)}};
  }
  j["heads"] = std::move(heads);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("checkpoint: " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != kVersion) {
      throw std::runtime_error("checkpoint: unsupported format or version");
    }
    ModelState model;
    model.link_floor = j.at("link_floor").get<double>();
    model.backbone_frozen = j.at("backbone_frozen").get<bool>();
    model.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    model.scaler.inv_std = j.at("scaler").at("inv_std").get<std::vector<double>>();
    model.seeds.init = j.at("seeds").at("init").get<std::uint64_t>();
    model.seeds.pretrain = j.at("seeds").at("pretrain").get<std::uint64_t>();
    model.seeds.train = j.at("seeds").at("train").get<std::uint64_t>();
    const json& backbone = j.at("backbone");
    for (std::size_t i = 0; i < backbone.size(); ++i) {
      model.backbone.push_back(layer_from_json(backbone[i], "backbone[" + std::to_string(i) + "]"));
    }
    for (Head h : kAllHeads) {
      const json& head = j.at("heads").at(head_name(h));
      const std::string where = std::string("heads.") + head_name(h);
      model.head(h).hidden = layer_from_json(head.at("hidden"), where + ".hidden");
      model.head(h).output = layer_from_json(head.at("output"), where + ".output");
    }
    // Layer chaining must be consistent.
    std::size_t width = model.backbone.empty() ? model.heads[0].hidden.in_dim()
                                               : model.backbone.front().in_dim();
    if (width != j.at("dims").at("input").get<std::size_t>()) {
      throw std::runtime_error("checkpoint: input dimension does not match layer shapes");
    }
    for (const auto& layer : model.backbone) {
      if (layer.in_dim() != width) throw std::runtime_error("checkpoint: backbone shapes do not chain");
      width = layer.out_dim();
    }
    for (const auto& head : model.heads) {
      if (head.hidden.in_dim() != width || head.output.in_dim() != head.hidden.out_dim()) {
        throw std::runtime_error("checkpoint: head shapes do not chain");
      }
    }
    if (!model.scaler.mean.empty() && (model.scaler.mean.size() != model.input_dim() ||
                                       model.scaler.inv_std.size() != model.input_dim())) {
      throw std::runtime_error("checkpoint: scaler dimension does not match input");
    }
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: " + path.string() + ": missing or malformed field: " +
                             e.what());
  }
}

}  // namespace crossview
