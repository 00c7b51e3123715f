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

// Synthetic summarization corpus.
//
// The content vocabulary is split into slot groups ("a*", "b*", ...). A
// sentence fills slots 0..L-1 in order; within a slot, tokens follow a Zipf
// popularity prior and each token has one favoured successor in the next
// slot, boosted by successor_affinity (the seeded Markov template). A source
// document is a run of such sentences. Its reference summary copies one
// source sentence, and each reference token is independently swapped, with
// probability hallucination_rate, for a token of the same slot that is absent
// from the source (drawn from the template distribution restricted to
// unsupported tokens). Hallucinations are therefore plausible, popular tokens, which a
// model trained on the references learns to produce.

#include <cstdint>
#include <span>
#include <vector>

#include "faithdec/core.hpp"
#include "faithdec/model.hpp"

namespace faithdec {

struct IntRange {
  int min = 0;
  int max = 0;
};

struct CorpusConfig {
  int vocab_size = 64;
  int num_docs = 5000;  // across all splits
  IntRange source_len{16, 28};
  IntRange summary_len{3, 6};
  double hallucination_rate = 0.3;
  // How much more likely a token's favoured successor is than its popularity
  // alone suggests.
  double successor_affinity = 6.0;
  std::uint64_t seed = 7;
  double train_fraction = 0.8;
  double dev_fraction = 0.1;  // test gets the remainder
};

void validate(const CorpusConfig& cfg);

struct Example {
  Document source;
  TokenSeq reference;  // EOS-terminated
};

struct Corpus {
  Vocabulary vocab;
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;

  const std::vector<Example>& split(const std::string& name) const;
};

// Deterministic given cfg.seed. Throws ConfigError when the vocabulary
// cannot supply out-of-source tokens.
Corpus generate_corpus(const CorpusConfig& cfg);

std::vector<TrainingPair> training_pairs(std::span<const Example> examples);
std::vector<Document> documents(std::span<const Example> examples);

}  // namespace faithdec
