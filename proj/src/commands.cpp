#include "crossview/commands.hpp"

#include <fstream>
#include <map>

#include "crossview/checkpoint.hpp"
#include "crossview/export.hpp"
#include "json.hpp"

namespace crossview {

namespace {

using nlohmann::json;

// Runs `fn`, rethrowing any failure as a CommandError tagged with `stage`.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const CommandError&) {
    throw;
  } catch (const std::exception& e) {
    throw CommandError(name, e.what());
  }
}

OutputPaths outputs(const RunConfig& config) {
  return stage("output", [&] {
    std::filesystem::create_directories(config.out_dir);
    return OutputPaths{config.out_dir};
  });
}

Dataset require_dataset(const OutputPaths& out) {
  return stage("load-dataset", [&] { return load_records(out.dataset()); });
}

ModelState require_checkpoint(const OutputPaths& out) {
  return stage("load-checkpoint", [&] { return load_checkpoint(out.checkpoint()); });
}

const GeoRecord& find_record(const Dataset& ds, std::int64_t id) {
  for (const auto& r : ds.records) {
    if (r.id == id) return r;
  }
  throw CommandError("query", "no record with id " + std::to_string(id));
}

json nll_json(const NllReport& r) {
  return json{{"scene", r.scene}, {"image", r.image}, {"counts", r.counts}, {"total", r.total}};
}

}  // namespace

void save_split(const SplitIds& ids, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << json{{"train", ids.train}, {"val", ids.val}, {"test", ids.test}}.dump() << '\n';
}

SplitIds load_split(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open split manifest " + path.string());
  try {
    const json j = json::parse(in);
    return SplitIds{j.at("train").get<std::vector<std::int64_t>>(),
                    j.at("val").get<std::vector<std::int64_t>>(),
                    j.at("test").get<std::vector<std::int64_t>>()};
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed split manifest " + path.string() + ": " + e.what());
  }
}

Split apply_split(const Dataset& dataset, const SplitIds& ids) {
  std::map<std::int64_t, const GeoRecord*> by_id;
  for (const auto& r : dataset.records) by_id[r.id] = &r;
  const auto pick = [&](const std::vector<std::int64_t>& wanted) {
    std::vector<GeoRecord> out;
    out.reserve(wanted.size());
    for (auto id : wanted) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw std::runtime_error("split manifest references unknown id " + std::to_string(id));
      }
      out.push_back(*it->second);
    }
    return out;
  };
  return Split{pick(ids.train), pick(ids.val), pick(ids.test)};
}

GenerateSummary cmd_generate(const RunConfig& config) {
  const OutputPaths out = outputs(config);
  const StageSeeds seeds = stage_seeds(config.seed);
  WorldConfig wc = config.world;
  wc.seed = seeds.world;
  const World world = stage("generate", [&] { return generate_world(wc); });
  const Split split =
      stage("split", [&] { return split_dataset(world.dataset.records, config.split, seeds.split); });
  stage("save-dataset", [&] {
    save_records(world.dataset, out.dataset());
    SplitIds ids;
    for (const auto& r : split.train) ids.train.push_back(r.id);
    for (const auto& r : split.val) ids.val.push_back(r.id);
    for (const auto& r : split.test) ids.test.push_back(r.id);
    save_split(ids, out.split());
  });
  return {world.dataset.records.size(), split.train.size(), split.val.size(), split.test.size()};
}

TrainSummary cmd_train(const RunConfig& config) {
  const OutputPaths out = outputs(config);
  const StageSeeds seeds = stage_seeds(config.seed);
  const Dataset ds = require_dataset(out);
  const Split split = stage("load-split", [&] { return apply_split(ds, load_split(out.split())); });

  ModelState model = stage("init", [&] {
    ModelConfig mc = model_config(config);
    if (mc.input_dim != ds.header.feature_dim || mc.scene_dim != ds.header.scene_dim ||
        mc.image_dim != ds.header.image_dim || mc.count_dim != ds.header.count_dim) {
      throw std::invalid_argument("dataset dimensions do not match the world section of the config");
    }
    ModelState m = make_model(mc, seeds.init);
    m.scaler = fit_scaler(split.train);
    return m;
  });

  TrainConfig pre_cfg = config.train;
  pre_cfg.seed = seeds.pretrain;
  PretrainResult pre = stage("pretrain", [&] { return pretrain_backbone(std::move(model), split.train, pre_cfg); });

  TrainConfig head_cfg = config.train;
  head_cfg.seed = seeds.train;
  TrainResult trained =
      stage("train", [&] { return train_heads(std::move(pre.model), split.train, split.val, head_cfg); });

  stage("save", [&] {
    save_checkpoint(trained.model, out.checkpoint());
    write_history_csv(out.history(), trained.history);
    std::ofstream kl(out.pretrain_history(), std::ios::binary);
    kl << "epoch,train_kl\n0," << format_double(pre.initial_kl) << '\n';
    for (std::size_t i = 0; i < pre.epoch_kl.size(); ++i) {
      kl << i + 1 << ',' << format_double(pre.epoch_kl[i]) << '\n';
    }
  });

  TrainSummary summary;
  summary.initial_kl = pre.initial_kl;
  summary.final_kl = pre.epoch_kl.empty() ? pre.initial_kl : pre.epoch_kl.back();
  summary.history = std::move(trained.history);
  return summary;
}

EvalSummary cmd_eval(const RunConfig& config) {
  const OutputPaths out = outputs(config);
  const Dataset ds = require_dataset(out);
  const Split split = stage("load-split", [&] { return apply_split(ds, load_split(out.split())); });
  const ModelState model = require_checkpoint(out);
  if (split.test.empty()) throw CommandError("eval", "test split is empty");

  EvalSummary summary;
  json report;
  stage("nll", [&] {
    summary.test_nll = evaluate_nll(model, split.test, config.train.head_weights, config.train.simplex_eps);
    report["test"] = nll_json(summary.test_nll);
    report["train"] = nll_json(evaluate_nll(model, split.train, config.train.head_weights,
                                            config.train.simplex_eps));
    if (!split.val.empty()) {
      report["val"] = nll_json(evaluate_nll(model, split.val, config.train.head_weights,
                                            config.train.simplex_eps));
    }
  });

  const ReferenceDB db = stage("reference-db", [&] { return build_reference_db(model, ds.records); });
  stage("localize", [&] {
    for (Head head : kAllHeads) {
      std::vector<double> ranks;
      ranks.reserve(split.test.size());
      for (const auto& q : split.test) ranks.push_back(localize(q.ground, q.id, db, head));
      LocalizationCurve curve = accuracy_curve(ranks, config.thresholds);
      write_curve_csv(out.curve(head), curve);
      json points = json::array();
      for (const auto& p : curve.points) points.push_back({p.threshold, p.accuracy});
      report["localization"][head_name(head)] = points;
      summary.curves[static_cast<std::size_t>(head)] = std::move(curve);
    }
  });
  stage("save", [&] {
    std::ofstream f(out.nll_report(), std::ios::binary);
    f << report.dump(2) << '\n';
  });
  return summary;
}

std::vector<ScoredId> cmd_retrieve(const RunConfig& config, std::int64_t query_id, Head head,
                                   std::size_t k) {
  const OutputPaths out = outputs(config);
  const Dataset ds = require_dataset(out);
  const ModelState model = require_checkpoint(out);
  const GeoRecord& query = find_record(ds, query_id);
  const ReferenceDB db = stage("reference-db", [&] { return build_reference_db(model, ds.records); });
  if (k > db.size()) {
    throw CommandError("retrieve", "k = " + std::to_string(k) + " exceeds the database size |db| = " +
                                       std::to_string(db.size()));
  }
  const auto hits = stage("retrieve", [&] { return retrieve_topk(query.ground, db, head, k); });
  stage("save", [&] {
    std::vector<ResultRow> rows;
    for (const auto& h : hits) rows.push_back({h.id, db.entries[db.index_of(h.id)].location, h.score});
    write_results_csv(out.retrieval(query_id, head), rows);
  });
  return hits;
}

LabelRef parse_label(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("label '" + text + "' must look like head:index");
  }
  LabelRef label;
  label.head = parse_head(text.substr(0, colon));
  try {
    std::size_t used = 0;
    const std::string idx = text.substr(colon + 1);
    const long long v = std::stoll(idx, &used);
    if (used != idx.size() || v < 0) throw std::invalid_argument("bad index");
    label.index = static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("label '" + text + "' has an invalid index");
  }
  return label;
}

AttributeSearchResult cmd_search(const RunConfig& config, const LabelRef& primary,
                                 const LabelRef& secondary, std::size_t top_n) {
  const OutputPaths out = outputs(config);
  const Dataset ds = require_dataset(out);
  const ModelState model = require_checkpoint(out);
  const ReferenceDB db = stage("reference-db", [&] { return build_reference_db(model, ds.records); });
  auto result = stage("search", [&] { return attribute_search(db, primary, secondary, top_n); });
  stage("save", [&] {
    std::ofstream f(out.search(), std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + out.search().string());
    f << "id,lat,lon,score,secondary_score\n";
    for (const auto& h : result.ordered) {
      f << h.id << ',' << format_double(h.location.lat) << ',' << format_double(h.location.lon)
        << ',' << format_double(h.primary) << ',' << format_double(h.secondary) << '\n';
    }
  });
  return result;
}

Heatmap cmd_heatmap(const RunConfig& config, std::int64_t query_id, Head head) {
  const OutputPaths out = outputs(config);
  const Dataset ds = require_dataset(out);
  const ModelState model = require_checkpoint(out);
  const GeoRecord& query = find_record(ds, query_id);
  const ReferenceDB db = stage("reference-db", [&] { return build_reference_db(model, ds.records); });
  const HeatmapGrid grid{config.heatmap_rows, config.heatmap_cols, config.world.geo_extent};
  Heatmap map = stage("heatmap", [&] { return heatmap(query.ground, db, head, grid); });
  stage("save", [&] {
    const auto stem = out.heatmap_stem(query_id, head);
    write_heatmap_pgm(stem.string() + ".pgm", map);
    write_heatmap_csv(stem.string() + ".csv", map);
    write_heatmap_sidecar(stem.string() + ".json", map);
  });
  return map;
}

}  // namespace crossview
