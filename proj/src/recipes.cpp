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

#include "faithdec/recipes.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "faithdec/random.hpp"

namespace faithdec {

namespace {

const std::vector<std::pair<RecipeKind, std::string>>& kind_table() {
  static const std::vector<std::pair<RecipeKind, std::string>> table = {
      {RecipeKind::kGreedy, "greedy"},
      {RecipeKind::kBeam, "beam"},
      {RecipeKind::kNucleus, "nucleus"},
      {RecipeKind::kBeamRanking, "beam+ranking"},
      {RecipeKind::kGreedyLookahead, "greedy+lookahead"},
      {RecipeKind::kBeamLookahead, "beam+lookahead"},
      {RecipeKind::kBeamLookaheadRanking, "beam+lookahead+ranking"},
  };
  return table;
}

LookaheadConfig effective_lookahead(const Recipe& r) {
  LookaheadConfig la = r.lookahead;
  la.base = r.kind == RecipeKind::kGreedyLookahead ? LookaheadBase::kGreedy
                                                   : LookaheadBase::kBeam;
  la.beam_width = r.beam_width;
  return la;
}

}  // namespace

bool uses_lookahead(RecipeKind k) {
  return k == RecipeKind::kGreedyLookahead || k == RecipeKind::kBeamLookahead ||
         k == RecipeKind::kBeamLookaheadRanking;
}

bool uses_ranking(RecipeKind k) {
  return k == RecipeKind::kBeamRanking || k == RecipeKind::kBeamLookaheadRanking;
}

std::string recipe_kind_name(RecipeKind kind) {
  for (const auto& [k, name] : kind_table()) {
    if (k == kind) return name;
  }
  return "unknown";
}

RecipeKind parse_recipe_kind(const std::string& name) {
  for (const auto& [k, n] : kind_table()) {
    if (n == name) return k;
  }
  throw ConfigError("unknown decoding recipe '" + name + "'");
}

const std::vector<std::string>& recipe_kind_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : kind_table()) out.push_back(entry.second);
    return out;
  }();
  return names;
}

std::string recipe_label(const Recipe& r) {
  std::ostringstream os;
  os << recipe_kind_name(r.kind);
  switch (r.kind) {
    case RecipeKind::kGreedy:
      break;
    case RecipeKind::kNucleus:
      os << "(p=" << r.top_p << ")";
      break;
    case RecipeKind::kBeam:
      os << "(k=" << r.beam_width << ")";
      break;
    case RecipeKind::kBeamRanking:
      os << "(k=" << r.beam_width << ",r=" << r.rank_scorer << ")";
      break;
    case RecipeKind::kGreedyLookahead:
    case RecipeKind::kBeamLookahead:
    case RecipeKind::kBeamLookaheadRanking: {
      os << "(";
      if (r.kind != RecipeKind::kGreedyLookahead) os << "k=" << r.beam_width << ",";
      os << "w=" << r.lookahead.weight << ",c=" << r.lookahead.candidate_cap
         << ",h=" << r.lookahead.scorer;
      if (r.lookahead.rollout_length) os << ",l=" << *r.lookahead.rollout_length;
      switch (r.lookahead.rollout.kind) {
        case RolloutKind::kGreedy:
          break;
        case RolloutKind::kSampling:
          os << ",rollout=sampling";
          break;
        case RolloutKind::kBeam:
          os << ",rollout=beam" << r.lookahead.rollout.beam_width;
          break;
      }
      if (r.kind == RecipeKind::kBeamLookaheadRanking) os << ",r=" << r.rank_scorer;
      os << ")";
      break;
    }
  }
  return os.str();
}

void validate(const Recipe& r, std::size_t vocab_size) {
  if (r.beam_width < 1) throw ConfigError("beam width must be >= 1");
  validate(NucleusConfig{r.top_p});
  if (uses_ranking(r.kind)) {
    make_scorer(r.rank_scorer, kNoToken);
  }
  if (uses_lookahead(r.kind)) {
    validate(effective_lookahead(r), vocab_size);
    make_scorer(r.lookahead.scorer, kNoToken);
  }
}

RecipeResult run_recipe(const ConditionalModel& model, const Document& x,
                        const Recipe& r, const DecodeConfig& dcfg,
                        LookaheadTrace* trace) {
  RecipeResult out;
  const TokenId eos = model.eos_id();
  switch (r.kind) {
    case RecipeKind::kGreedy:
      out.output = greedy_decode(model, x, dcfg);
      break;
    case RecipeKind::kNucleus:
      out.output = nucleus_decode(model, x, NucleusConfig{r.top_p}, dcfg);
      break;
    case RecipeKind::kBeam:
      out.candidates = beam_decode(model, x, BeamConfig{r.beam_width}, dcfg);
      out.output = out.candidates.front();
      break;
    case RecipeKind::kBeamRanking: {
      out.candidates = beam_decode(model, x, BeamConfig{r.beam_width}, dcfg);
      auto ranked = rank_candidates(out.candidates, make_scorer(r.rank_scorer, eos), x);
      out.output = ranked.front().hypothesis;
      break;
    }
    case RecipeKind::kGreedyLookahead:
    case RecipeKind::kBeamLookahead: {
      auto la = effective_lookahead(r);
      out.candidates =
          lookahead_decode(model, x, la, make_scorer(la.scorer, eos), dcfg, trace);
      out.output = out.candidates.front();
      break;
    }
    case RecipeKind::kBeamLookaheadRanking: {
      auto la = effective_lookahead(r);
      out.candidates =
          lookahead_decode(model, x, la, make_scorer(la.scorer, eos), dcfg, trace);
      auto ranked = rank_candidates(out.candidates, make_scorer(r.rank_scorer, eos), x);
      out.output = ranked.front().hypothesis;
      break;
    }
  }
  return out;
}

std::uint64_t document_seed(std::uint64_t run_seed, std::size_t index) {
  return derive_seed(run_seed, index);
}

namespace {

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace

RecipeStats evaluate_recipe(const ConditionalModel& model,
                            std::span<const Document> docs,
                            std::span<const TokenSeq> references,
                            const Recipe& r, const std::vector<Scorer>& scorers,
                            const DecodeConfig& dcfg) {
  validate(r, model.vocab_size());
  if (!references.empty() && references.size() != docs.size()) {
    throw UsageError("evaluate_recipe: reference count mismatch");
  }
  RecipeStats stats;
  stats.label = recipe_label(r);
  for (const auto& s : scorers) stats.metric_means[s.name()] = 0.0;
  std::vector<double> seconds;
  seconds.reserve(docs.size());
  const std::uint64_t calls_before = model.calls();
  const TokenId eos = model.eos_id();

  for (std::size_t i = 0; i < docs.size(); ++i) {
    DecodeConfig d = dcfg;
    d.seed = document_seed(dcfg.seed, i);
    const auto t0 = std::chrono::steady_clock::now();
    RecipeResult res = run_recipe(model, docs[i], r, d);
    seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    for (const auto& s : scorers) {
      stats.metric_means[s.name()] += s(res.output.tokens, docs[i].tokens);
    }
    auto y = content(res.output.tokens, eos);
    stats.mean_length += static_cast<double>(y.size());
    if (!references.empty()) {
      stats.rouge_l += rouge_l_f1(y, content(references[i], eos));
    }
    stats.outputs.push_back(std::move(res.output.tokens));
  }

  const double n = docs.empty() ? 1.0 : static_cast<double>(docs.size());
  for (auto& [name, v] : stats.metric_means) v = 100.0 * v / n;
  stats.rouge_l = 100.0 * stats.rouge_l / n;
  stats.mean_length /= n;
  stats.model_calls_per_summary = static_cast<double>(model.calls() - calls_before) / n;
  stats.seconds_median = quantile(seconds, 0.5);
  stats.seconds_iqr = quantile(seconds, 0.75) - quantile(seconds, 0.25);
  return stats;
}

}  // namespace faithdec
