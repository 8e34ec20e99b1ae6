// crossview: generate a synthetic world, train the distribution model, and
// run retrieval, attribute search, localization and heatmap queries.

#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "crossview/commands.hpp"
#include "crossview/export.hpp"

using namespace crossview;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> num_records, num_classes, epochs, pretrain_epochs;
  std::optional<std::size_t> batch_size, head_hidden;
  std::optional<double> lr, weight_decay, noise;
  std::optional<std::string> decay_mode;
};

RunConfig resolve(const std::string& config_path, const Overrides& o) {
  RunConfig c;
  if (!config_path.empty()) c = load_run_config(config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.num_records) c.world.num_records = *o.num_records;
  if (o.num_classes) c.world.num_classes = *o.num_classes;
  if (o.noise) c.world.feature_noise_sigma = *o.noise;
  if (o.epochs) c.train.epochs = *o.epochs;
  if (o.pretrain_epochs) c.train.pretrain_epochs = *o.pretrain_epochs;
  if (o.batch_size) c.train.batch_size = *o.batch_size;
  if (o.head_hidden) c.model.head_hidden = *o.head_hidden;
  if (o.lr) c.train.lr = *o.lr;
  if (o.weight_decay) c.train.weight_decay = *o.weight_decay;
  if (o.decay_mode) {
    if (*o.decay_mode == "coupled") {
      c.train.decay_mode = WeightDecayMode::coupled;
    } else if (*o.decay_mode == "decoupled") {
      c.train.decay_mode = WeightDecayMode::decoupled;
    } else {
      throw std::invalid_argument("--weight-decay-mode must be coupled or decoupled");
    }
  }
  return c;
}

void print_nll(const char* name, const NllReport& r) {
  std::cout << name << " nll: scene=" << format_double(r.scene) << " image=" << format_double(r.image)
            << " counts=" << format_double(r.counts) << " total=" << format_double(r.total) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overhead-to-ground distribution model: training and geolocalization tools"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;
  app.add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Global seed (overrides config)");
  app.add_option("--out-dir", o.out_dir, "Output directory (overrides config)");
  app.add_option("--num-records", o.num_records, "world.num_records");
  app.add_option("--num-classes", o.num_classes, "world.num_classes");
  app.add_option("--noise", o.noise, "world.feature_noise_sigma");
  app.add_option("--epochs", o.epochs, "train.epochs");
  app.add_option("--pretrain-epochs", o.pretrain_epochs, "train.pretrain_epochs");
  app.add_option("--batch-size", o.batch_size, "train.batch_size");
  app.add_option("--head-hidden", o.head_hidden, "model.head_hidden");
  app.add_option("--lr", o.lr, "train.lr");
  app.add_option("--weight-decay", o.weight_decay, "train.weight_decay");
  app.add_option("--weight-decay-mode", o.decay_mode, "coupled | decoupled");

  auto* generate = app.add_subcommand("generate", "Generate a synthetic world and split manifest");
  auto* train = app.add_subcommand("train", "Pretrain the backbone, then train the heads");
  auto* eval = app.add_subcommand("eval", "NLL report and localization curves on the test split");

  std::int64_t query_id = 0;
  std::string head_text = "scene";
  std::size_t k = 3;
  auto* retrieve = app.add_subcommand("retrieve", "Top-k overhead entries for a ground query");
  retrieve->add_option("--query-id", query_id, "Record id whose ground sample is the query")->required();
  retrieve->add_option("--head", head_text, "scene | image | counts");
  retrieve->add_option("-k,--k", k, "Number of results");

  std::string primary_text, secondary_text;
  std::size_t top_n = 10;
  auto* search = app.add_subcommand("search", "Joint-attribute location search");
  search->add_option("--primary", primary_text, "head:index selecting the top-n")->required();
  search->add_option("--secondary", secondary_text, "head:index ordering the selection")->required();
  search->add_option("--top-n", top_n, "Selection size");

  auto* heat = app.add_subcommand("heatmap", "Localization heatmap for a ground query");
  heat->add_option("--query-id", query_id, "Record id whose ground sample is the query")->required();
  heat->add_option("--head", head_text, "scene | image | counts");
  std::optional<std::size_t> rows, cols;
  heat->add_option("--rows", rows, "Grid rows (overrides eval.heatmap_rows)");
  heat->add_option("--cols", cols, "Grid columns (overrides eval.heatmap_cols)");

  CLI11_PARSE(app, argc, argv);

  RunConfig config;
  try {
    config = resolve(config_path, o);
  } catch (const std::exception& e) {
    std::cerr << "error [config]: " << e.what() << '\n';
    return 2;
  }

  try {
    if (generate->parsed()) {
      const auto s = cmd_generate(config);
      std::cout << "generated " << s.records << " records (train " << s.train << ", val " << s.val
                << ", test " << s.test << ") in " << config.out_dir.string() << '\n';
    } else if (train->parsed()) {
      const auto s = cmd_train(config);
      std::cout << "pretraining KL: " << format_double(s.initial_kl) << " -> "
                << format_double(s.final_kl) << '\n';
      for (const auto& rec : s.history) {
        std::cout << "epoch " << rec.epoch << ": train total " << format_double(rec.train.total);
        if (rec.val) std::cout << ", val total " << format_double(rec.val->total);
        std::cout << '\n';
      }
    } else if (eval->parsed()) {
      const auto s = cmd_eval(config);
      print_nll("test", s.test_nll);
      for (Head head : kAllHeads) {
        std::cout << head_name(head) << " localization:";
        for (const auto& p : s.curves[static_cast<std::size_t>(head)].points) {
          std::cout << ' ' << format_double(p.threshold) << '=' << format_double(p.accuracy);
        }
        std::cout << '\n';
      }
    } else if (retrieve->parsed()) {
      const Head head = parse_head(head_text);
      for (const auto& hit : cmd_retrieve(config, query_id, head, k)) {
        std::cout << hit.id << ' ' << format_double(hit.score) << '\n';
      }
    } else if (search->parsed()) {
      const auto result =
          cmd_search(config, parse_label(primary_text), parse_label(secondary_text), top_n);
      for (const auto& hit : result.ordered) {
        std::cout << hit.id << ' ' << format_double(hit.primary) << ' ' << format_double(hit.secondary)
                  << '\n';
      }
    } else if (heat->parsed()) {
      if (rows) config.heatmap_rows = *rows;
      if (cols) config.heatmap_cols = *cols;
      const auto map = cmd_heatmap(config, query_id, parse_head(head_text));
      std::cout << "wrote " << map.grid.rows << "x" << map.grid.cols << " heatmap\n";
    }
  } catch (const CommandError& e) {
    std::cerr << "error " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error [arguments]: " << e.what() << '\n';
    return 1;
  }
  return EXIT_SUCCESS;
}
