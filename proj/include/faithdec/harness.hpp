/* Copyright 2026 The faithdec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Experiment orchestration and report emission.
//
// Every report is a Report: a report type, its fixed column list, rows of
// string or number cells, and the configuration that produced it. Reports
// are checked against the schema for their type before they are written as
// CSV (header row, '.' decimals) and JSON (one object per row).

#include <filesystem>
#include <string>
#include <vector>

#include "faithdec/corpus.hpp"
#include "faithdec/distill.hpp"
#include "faithdec/io.hpp"
#include "faithdec/recipes.hpp"

namespace faithdec {

struct Report {
  std::string type;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
  Json config = Json::object();

  void add_row(std::vector<Json> cells);
  const Json& at(std::size_t row, const std::string& column) const;
};

// Expected columns for a report type. `scorers` fills the per-metric columns
// of "experiment" reports and is ignored otherwise.
std::vector<std::string> report_schema(const std::string& type,
                                       const std::vector<std::string>& scorers = {});
// Throws RuntimeAbort when columns or cells do not match the schema.
void validate_report(const Report& r);

std::string report_to_csv(const Report& r);
Json report_to_json(const Report& r);
Report report_from_json(const Json& j);
// Writes <stem>.csv and <stem>.json after validation.
void write_report(const Report& r, const std::filesystem::path& stem);

// Columns that hold wall-clock measurements; everything else is deterministic.
bool is_wall_clock_column(const std::string& column);

const std::vector<std::string>& default_scorer_names();

// Baseline model: seeded small random initialization (seed cfg.seed), then
// train() on the training-split references.
LogLinearModel train_baseline(const Corpus& corpus, const TrainConfig& cfg,
                              std::vector<double>* epoch_losses = nullptr);

struct ExperimentConfig {
  std::vector<Recipe> recipes;
  std::vector<std::string> scorers = default_scorer_names();
  DecodeConfig decode;
  std::string split = "test";
  std::size_t limit = 0;  // 0: the whole split
};

ExperimentConfig experiment_config_from_json(const Json& j);
Json experiment_config_to_json(const ExperimentConfig& c);

// Validates every recipe and scorer before decoding anything.
void validate(const ExperimentConfig& cfg, std::size_t vocab_size);

// One row per recipe: scorer means (0-100), ROUGE-L against references,
// mean length, model calls and seconds per summary.
Report run_experiment(const ConditionalModel& model, const Corpus& corpus,
                      const ExperimentConfig& cfg);

enum class SweepAxis { kBeamSize, kTopP, kLookaheadWeight, kAlpha };

SweepAxis parse_sweep_axis(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

// Default recipe swept along an axis: beam for beam_size, nucleus for top_p,
// beam+lookahead for lookahead_weight and alpha.
Recipe default_sweep_recipe(SweepAxis axis);

// Long format: one row per (value, scorer), plus a "rouge_l" pseudo-scorer
// row. On the alpha axis the lookahead heuristic becomes combined@alpha.
Report sweep(const ConditionalModel& model, const Corpus& corpus,
             const ExperimentConfig& cfg, SweepAxis axis, const Recipe& base,
             const std::vector<double>& values);

struct TimingResult {
  std::string recipe;
  int repeats = 0;
  double seconds_median = 0.0;  // per summary, over repeats
  double seconds_iqr = 0.0;
  double model_calls_per_summary = 0.0;
  std::uint64_t model_calls_total = 0;  // per repeat
};

// Decodes `docs` `repeats` times (>= 3).
TimingResult timing(const ConditionalModel& model, std::span<const Document> docs,
                    const Recipe& recipe, const DecodeConfig& dcfg, int repeats);
Report timing_report(const std::vector<TimingResult>& results, const Json& config);

// Grid search of the lookahead weight on the dev split. The objective is the
// mean over all reported scorers and ROUGE-L.
struct WeightSearch {
  double best_weight = 0.0;
  Report report;  // "tune" rows: weight, objective
};
WeightSearch tune_lookahead_weight(const ConditionalModel& model, const Corpus& corpus,
                                   const ExperimentConfig& cfg, const Recipe& base,
                                   const std::vector<double>& grid);

Report max_top_report(const ConditionalModel& model, std::span<const Document> docs,
                      const std::vector<int>& beam_sizes,
                      const std::vector<std::string>& scorers, const DecodeConfig& dcfg);

// Scores the greedy rollouts of every prefix of the recipe's output on `doc`.
Report prefix_profile_report(const ConditionalModel& model, const Vocabulary& vocab,
                             const Document& doc, const Recipe& recipe,
                             const std::vector<std::string>& scorers,
                             const DecodeConfig& dcfg);

Report distill_report(const std::vector<DistillRound>& rounds,
                      const std::vector<std::string>& scorers, const Json& config);

}  // namespace faithdec
