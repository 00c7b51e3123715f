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

// Named decoding recipes: one entry point that turns (model, document) into
// the single summary a strategy would emit.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "faithdec/decoders.hpp"
#include "faithdec/guided.hpp"

namespace faithdec {

enum class RecipeKind {
  kGreedy,
  kBeam,
  kNucleus,
  kBeamRanking,
  kGreedyLookahead,
  kBeamLookahead,
  kBeamLookaheadRanking,
};

struct Recipe {
  RecipeKind kind = RecipeKind::kGreedy;
  int beam_width = 10;
  double top_p = 0.9;
  std::string rank_scorer = "composite";
  LookaheadConfig lookahead;  // lookahead kinds; base follows the kind
};

// "greedy", "beam", "nucleus", "beam+ranking", "greedy+lookahead",
// "beam+lookahead", "beam+lookahead+ranking".
std::string recipe_kind_name(RecipeKind kind);
RecipeKind parse_recipe_kind(const std::string& name);  // throws ConfigError
const std::vector<std::string>& recipe_kind_names();

// Human-readable label with the parameters that matter for the kind,
// e.g. "beam(k=10)" or "beam+lookahead(k=10,w=5,c=5,h=precision)".
std::string recipe_label(const Recipe& r);

void validate(const Recipe& r, std::size_t vocab_size);

struct RecipeResult {
  Hypothesis output;
  std::vector<Hypothesis> candidates;  // beam-style recipes only
};

// Nucleus recipes sample with dcfg.seed. `trace` is filled by lookahead
// recipes and left untouched otherwise.
RecipeResult run_recipe(const ConditionalModel& model, const Document& x,
                        const Recipe& r, const DecodeConfig& dcfg,
                        LookaheadTrace* trace = nullptr);

bool uses_lookahead(RecipeKind kind);
bool uses_ranking(RecipeKind kind);

// Seed used for document `index` of a run seeded with `run_seed`.
std::uint64_t document_seed(std::uint64_t run_seed, std::size_t index);

struct RecipeStats {
  std::string label;
  std::map<std::string, double> metric_means;  // 0-100 scale
  double rouge_l = 0.0;                        // 0-100, against references
  double mean_length = 0.0;                    // content tokens
  double model_calls_per_summary = 0.0;
  double seconds_median = 0.0;                 // per summary
  double seconds_iqr = 0.0;
  std::vector<TokenSeq> outputs;               // one per document
};

// Decodes every document with `r` (document i seeded by document_seed) and
// averages each scorer over the outputs. `references` may be empty, in which
// case rouge_l stays 0.
RecipeStats evaluate_recipe(const ConditionalModel& model,
                            std::span<const Document> docs,
                            std::span<const TokenSeq> references,
                            const Recipe& r, const std::vector<Scorer>& scorers,
                            const DecodeConfig& dcfg);

}  // namespace faithdec
