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

// Greedy, beam and nucleus decoding over any ConditionalModel.
//
// Length rule shared by every decoder: max_length caps the number of emitted
// tokens including EOS. When a hypothesis holds max_length - 1 tokens the
// only admissible next token is EOS, scored with its true log-probability,
// so every returned hypothesis is finished and its logprob equals
// sequence_logprob of its tokens.
//
// Tie-breaking: the lowest token id wins among equal log-probabilities and,
// in beam search, earlier parents win over later ones.

#include <cstdint>
#include <span>
#include <vector>

#include "faithdec/core.hpp"
#include "faithdec/model.hpp"
#include "faithdec/random.hpp"

namespace faithdec {

struct DecodeConfig {
  int max_length = 32;
  double length_penalty = 0.0;  // final score = logprob / length^penalty
  std::uint64_t seed = 0;       // sampling only
};

struct BeamConfig {
  int width = 10;
};

struct NucleusConfig {
  double top_p = 0.9;
};

void validate(const DecodeConfig& cfg);
void validate(const BeamConfig& cfg);
void validate(const NucleusConfig& cfg);

// Lowest id among the maximal entries.
TokenId argmax_token(std::span<const double> logprobs);

// Score used to order finished hypotheses.
double length_adjusted_score(const Hypothesis& h, double length_penalty);

Hypothesis greedy_decode(const ConditionalModel& model, const Document& x,
                         const DecodeConfig& cfg);
// Greedy completion of an unfinished prefix; a finished start is returned as is.
Hypothesis greedy_continue(const ConditionalModel& model, const Document& x,
                           const Hypothesis& start, const DecodeConfig& cfg);

// Finished hypotheses, at most `beam.width`, best first.
std::vector<Hypothesis> beam_decode(const ConditionalModel& model,
                                    const Document& x, const BeamConfig& beam,
                                    const DecodeConfig& cfg);
std::vector<Hypothesis> beam_continue(const ConditionalModel& model,
                                      const Document& x, const Hypothesis& start,
                                      const BeamConfig& beam,
                                      const DecodeConfig& cfg);

// Token ids of the nucleus: probability-descending order (ties by id), the
// shortest prefix of that order whose mass reaches top_p, boundary included.
std::vector<TokenId> nucleus_set(std::span<const double> logprobs, double top_p);

// Samples one token from the renormalized nucleus.
TokenId nucleus_sample(std::span<const double> logprobs, double top_p, Rng& rng);

// Uses a generator seeded with cfg.seed.
Hypothesis nucleus_decode(const ConditionalModel& model, const Document& x,
                          const NucleusConfig& nuc, const DecodeConfig& cfg);
Hypothesis nucleus_continue(const ConditionalModel& model, const Document& x,
                            const Hypothesis& start, const NucleusConfig& nuc,
                            Rng& rng, const DecodeConfig& cfg);

}  // namespace faithdec
