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

// Faithfulness-aware decoding: metric re-ranking of beam candidates and
// lookahead decoding, where each candidate next token is scored by
//
//   f(y_t) = log P(y_{1:t} | x) + w * max_{r in rollouts(y_{1:t})} h(r, x)
//
// and rollouts are completions of y_{1:t} produced by a secondary decoder.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "faithdec/core.hpp"
#include "faithdec/decoders.hpp"
#include "faithdec/metrics.hpp"
#include "faithdec/model.hpp"

namespace faithdec {

// Re-scores candidates with `scorer` and sorts them best first; ties keep the
// original (beam) order. source_rank is the index in `cands`.
std::vector<ScoredCandidate> rank_candidates(const std::vector<Hypothesis>& cands,
                                             const Scorer& scorer,
                                             const Document& x);

// Scorer returning the model's own sequence log-probability.
Scorer model_score_scorer(const ConditionalModel& model);

enum class RolloutKind { kGreedy, kSampling, kBeam };

struct RolloutStrategy {
  RolloutKind kind = RolloutKind::kGreedy;
  int beam_width = 4;  // kBeam only
};

enum class LookaheadBase { kGreedy, kBeam };

struct LookaheadConfig {
  double weight = 5.0;
  int candidate_cap = 5;
  RolloutStrategy rollout;
  std::optional<int> rollout_length;  // nullopt: roll out to EOS
  LookaheadBase base = LookaheadBase::kBeam;
  int beam_width = 10;  // kBeam base only
  std::string scorer = "precision";
};

void validate(const LookaheadConfig& cfg, std::size_t vocab_size);

struct RolloutSet {
  std::vector<TokenSeq> completions;
  std::vector<double> scores;

  double best() const;
};

// Completions of `prefix` under the configured strategy, each scored with h.
// Sampling rollouts draw from a generator seeded by cfg.seed and the prefix.
RolloutSet rollout(const ConditionalModel& model, const Document& x,
                   const Hypothesis& prefix, const LookaheadConfig& cfg,
                   const Scorer& scorer, const DecodeConfig& dcfg);

struct PoolEntry {
  std::size_t parent = 0;  // index into the step's live hypotheses
  TokenId token = 0;
  double logprob = 0.0;    // cumulative log P(y_{1:t} | x)
  double heuristic = 0.0;  // max rollout score
  double selection = 0.0;  // logprob + weight * heuristic
  bool selected = false;
};

struct LookaheadStep {
  std::vector<TokenSeq> live;  // prefixes expanded at this step
  std::vector<PoolEntry> pool;
  std::vector<RolloutSet> rollouts;  // parallel to pool
};

struct LookaheadTrace {
  std::vector<LookaheadStep> steps;
};

// base = greedy: one finished hypothesis. base = beam: up to beam_width
// finished hypotheses ordered by their (pure) model score. Per live
// hypothesis the pool is its top max(candidate_cap, beam width) next tokens;
// tokens outside the pool are not selectable.
std::vector<Hypothesis> lookahead_decode(const ConditionalModel& model,
                                         const Document& x,
                                         const LookaheadConfig& cfg,
                                         const Scorer& scorer,
                                         const DecodeConfig& dcfg,
                                         LookaheadTrace* trace = nullptr);

// Lookahead with a beam base, then re-ranking of its candidates.
std::vector<ScoredCandidate> beam_lookahead_rank(const ConditionalModel& model,
                                                 const Document& x,
                                                 const LookaheadConfig& cfg,
                                                 const Scorer& lookahead_scorer,
                                                 const Scorer& rank_scorer,
                                                 const DecodeConfig& dcfg);

struct MaxTopRow {
  int beam_size = 0;
  std::string scorer;
  double mean_top = 0.0;
  double mean_max = 0.0;
};

// For every beam size and scorer: mean over documents of the score of the
// beam's top candidate and of the best-scoring candidate.
std::vector<MaxTopRow> max_top_analysis(const ConditionalModel& model,
                                        const std::vector<Document>& docs,
                                        const std::vector<int>& beam_sizes,
                                        const std::vector<Scorer>& scorers,
                                        const DecodeConfig& dcfg);

// All prefixes of y, from empty to y itself.
std::vector<TokenSeq> prefix_chain(const TokenSeq& y);

// series[s][t]: scorer s applied to the greedy completion of prefixes[t].
std::vector<std::vector<double>> prefix_rollout_profile(
    const ConditionalModel& model, const Document& x,
    const std::vector<TokenSeq>& prefixes, const std::vector<Scorer>& scorers,
    const DecodeConfig& dcfg);

}  // namespace faithdec
