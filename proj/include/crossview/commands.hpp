#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "crossview/evaluation.hpp"
#include "crossview/run_config.hpp"

namespace crossview {

/// Failure inside a pipeline command; `stage()` names the step that failed.
class CommandError : public std::runtime_error {
 public:
  CommandError(std::string stage, const std::string& message)
      : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Stable output locations under the run's output directory.
struct OutputPaths {
  std::filesystem::path dir;
  std::filesystem::path dataset() const { return dir / "dataset.jsonl"; }
  std::filesystem::path split() const { return dir / "split.json"; }
  std::filesystem::path checkpoint() const { return dir / "model.json"; }
  std::filesystem::path history() const { return dir / "history.csv"; }
  std::filesystem::path pretrain_history() const { return dir / "pretrain.csv"; }
  std::filesystem::path nll_report() const { return dir / "nll_report.json"; }
  std::filesystem::path curve(Head head) const {
    return dir / ("curve_" + std::string(head_name(head)) + ".csv");
  }
  std::filesystem::path retrieval(std::int64_t query, Head head) const {
    return dir / ("retrieve_" + std::to_string(query) + "_" + head_name(head) + ".csv");
  }
  std::filesystem::path search() const { return dir / "search.csv"; }
  std::filesystem::path heatmap_stem(std::int64_t query, Head head) const {
    return dir / ("heatmap_" + std::to_string(query) + "_" + head_name(head));
  }
};

struct SplitIds {
  std::vector<std::int64_t> train, val, test;
};

void save_split(const SplitIds& ids, const std::filesystem::path& path);
SplitIds load_split(const std::filesystem::path& path);

/// Partitions a dataset according to a saved split manifest.
Split apply_split(const Dataset& dataset, const SplitIds& ids);

struct GenerateSummary {
  std::size_t records = 0;
  std::size_t train = 0, val = 0, test = 0;
};
GenerateSummary cmd_generate(const RunConfig& config);

struct TrainSummary {
  double initial_kl = 0.0;
  double final_kl = 0.0;
  std::vector<EpochRecord> history;
};
TrainSummary cmd_train(const RunConfig& config);

struct EvalSummary {
  NllReport test_nll;
  std::array<LocalizationCurve, kNumHeads> curves;
};
EvalSummary cmd_eval(const RunConfig& config);

std::vector<ScoredId> cmd_retrieve(const RunConfig& config, std::int64_t query_id, Head head,
                                   std::size_t k);

AttributeSearchResult cmd_search(const RunConfig& config, const LabelRef& primary,
                                 const LabelRef& secondary, std::size_t top_n);

/// Parses "head:index", e.g. "counts:2".
LabelRef parse_label(const std::string& text);

Heatmap cmd_heatmap(const RunConfig& config, std::int64_t query_id, Head head);

}  // namespace crossview
