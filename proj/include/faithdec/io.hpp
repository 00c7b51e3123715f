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

// File formats. All parse errors surface as ConfigError.
//
//   vocab.json        {"tokens": [...], "bos_id": 0, "eos_id": 1}
//   model.json        {"vocab_size", "bias", "transition" (row-major), "copy_gate"}
//   composite.json    {"weights": {name: value}, "intercept": value}
//   <split>.jsonl     {"id", "source": [tokens], "reference": [tokens]}
//   pseudo-labels     {"id", "source", "reference", "generated",
//                      "teacher_strategy", "seed"}
//   fitting CSV       header of metric names plus a final "label" column

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "faithdec/corpus.hpp"
#include "faithdec/distill.hpp"
#include "faithdec/guided.hpp"
#include "faithdec/metrics.hpp"
#include "faithdec/model.hpp"
#include "faithdec/recipes.hpp"

namespace faithdec {

using Json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);
Json parse_json(const std::string& text, const std::string& what);

Json vocab_to_json(const Vocabulary& v);
Vocabulary vocab_from_json(const Json& j);

Json model_to_json(const LogLinearModel& m);
// Validates shapes against the vocabulary size.
LogLinearModel model_from_json(const Json& j, const Vocabulary& vocab);

Json composite_to_json(const CompositeMetric& c);
CompositeMetric composite_from_json(const Json& j);

struct FitTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> features;
  std::vector<double> labels;
};
FitTable parse_fit_csv(const std::string& text);

// Token sequences travel as token strings.
Json tokens_to_json(const Vocabulary& v, std::span<const TokenId> tokens);
TokenSeq tokens_from_json(const Vocabulary& v, const Json& j);

std::string examples_to_jsonl(const Vocabulary& v, std::span<const Example> examples);
std::vector<Example> examples_from_jsonl(const Vocabulary& v, const std::string& text);

// Directory layout: vocab.json, train.jsonl, dev.jsonl, test.jsonl.
void save_corpus(const Corpus& c, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

std::string pseudo_labels_to_jsonl(const Vocabulary& v,
                                   std::span<const PseudoLabeledExample> labels);
std::vector<PseudoLabeledExample> pseudo_labels_from_jsonl(const Vocabulary& v,
                                                           const std::string& text);

// One JSON object per decoding step.
Json trace_to_json(const Vocabulary& v, const LookaheadTrace& trace);
std::string trace_to_jsonl(const Vocabulary& v, const LookaheadTrace& trace);

// Config objects. Missing keys keep their defaults; unknown keys are errors.
CorpusConfig corpus_config_from_json(const Json& j);
Json corpus_config_to_json(const CorpusConfig& c);
TrainConfig train_config_from_json(const Json& j);
Json train_config_to_json(const TrainConfig& c);
DecodeConfig decode_config_from_json(const Json& j);
Json decode_config_to_json(const DecodeConfig& c);
// {"name": "beam+lookahead", "beam": 10, "top_p": 0.9, "rank_scorer": ...,
//  "weight", "candidate_cap", "scorer", "rollout", "rollout_beam",
//  "rollout_length" ("full" or integer)}
Recipe recipe_from_json(const Json& j);
Json recipe_to_json(const Recipe& r);
DistillConfig distill_config_from_json(const Json& j);
Json distill_config_to_json(const DistillConfig& c);

}  // namespace faithdec
