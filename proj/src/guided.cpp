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

#include "faithdec/guided.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "faithdec/random.hpp"

namespace faithdec {

std::vector<ScoredCandidate> rank_candidates(const std::vector<Hypothesis>& cands,
                                             const Scorer& scorer,
                                             const Document& x) {
  std::vector<ScoredCandidate> out;
  out.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    ScoredCandidate c;
    c.hypothesis = cands[i];
    c.rank_score = scorer(cands[i].tokens, x.tokens);
    c.metric_scores[scorer.name()] = c.rank_score;
    c.source_rank = static_cast<int>(i);
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredCandidate& a, const ScoredCandidate& b) {
                     return a.rank_score > b.rank_score;
                   });
  return out;
}

Scorer model_score_scorer(const ConditionalModel& model) {
  return Scorer("model_score",
                [&model](std::span<const TokenId> y, std::span<const TokenId> src) {
                  Document doc{"", TokenSeq(src.begin(), src.end())};
                  return sequence_logprob(model, y, doc);
                });
}

void validate(const LookaheadConfig& cfg, std::size_t vocab_size) {
  if (!(cfg.weight >= 0.0) || !std::isfinite(cfg.weight)) {
    throw ConfigError("lookahead weight must be a finite value >= 0");
  }
  if (cfg.candidate_cap < 1 || static_cast<std::size_t>(cfg.candidate_cap) > vocab_size) {
    throw ConfigError("candidate_cap must be in [1, |V|]");
  }
  if (cfg.rollout_length && *cfg.rollout_length < 0) {
    throw ConfigError("rollout_length must be >= 0 or full");
  }
  if (cfg.rollout.kind == RolloutKind::kBeam && cfg.rollout.beam_width < 1) {
    throw ConfigError("rollout beam width must be >= 1");
  }
  if (cfg.base == LookaheadBase::kBeam && cfg.beam_width < 1) {
    throw ConfigError("lookahead beam width must be >= 1");
  }
}

double RolloutSet::best() const {
  double best = -std::numeric_limits<double>::infinity();
  for (double s : scores) best = std::max(best, s);
  return best;
}

namespace {

std::uint64_t hash_tokens(std::uint64_t seed, std::span<const TokenId> tokens) {
  std::uint64_t h = derive_seed(seed, tokens.size());
  for (TokenId t : tokens) h = derive_seed(h, static_cast<std::uint64_t>(t));
  return h;
}

// Greedy or sampled continuation of at most `limit` tokens, honouring the
// max_length EOS rule of the decoders.
template <class Pick>
Hypothesis limited_continue(const ConditionalModel& model, const Document& x,
                            Hypothesis h, const DecodeConfig& dcfg,
                            std::optional<int> limit, Pick pick) {
  std::vector<double> lp(model.vocab_size());
  int emitted = 0;
  while (!h.finished && (!limit || emitted < *limit)) {
    model.next_token_logprobs(h.tokens, x, lp);
    const bool must_end = h.tokens.size() + 1 >= static_cast<std::size_t>(dcfg.max_length);
    TokenId tok = must_end ? model.eos_id() : pick(std::span<const double>(lp));
    h = extend(h, tok, lp[static_cast<std::size_t>(tok)], model.eos_id());
    ++emitted;
  }
  return h;
}

struct PoolItem {
  PoolEntry entry;
  double token_logprob = 0.0;
};

bool selection_before(const PoolItem& a, const PoolItem& b) {
  if (a.entry.selection != b.entry.selection) return a.entry.selection > b.entry.selection;
  if (a.entry.parent != b.entry.parent) return a.entry.parent < b.entry.parent;
  return a.entry.token < b.entry.token;
}

// Top `n` token ids by log-probability, ties by lower id.
std::vector<TokenId> top_tokens(std::span<const double> lp, std::size_t n) {
  std::vector<TokenId> ids(lp.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  n = std::min(n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                    [&](TokenId a, TokenId b) {
                      const double la = lp[static_cast<std::size_t>(a)];
                      const double lb = lp[static_cast<std::size_t>(b)];
                      if (la != lb) return la > lb;
                      return a < b;
                    });
  ids.resize(n);
  return ids;
}

double completion_bound(const Hypothesis& h, const DecodeConfig& cfg) {
  if (cfg.length_penalty == 0.0) return h.logprob;
  const double len = cfg.length_penalty > 0.0 ? static_cast<double>(cfg.max_length)
                                              : static_cast<double>(h.tokens.size() + 1);
  return h.logprob / std::pow(len, cfg.length_penalty);
}

}  // namespace

RolloutSet rollout(const ConditionalModel& model, const Document& x,
                   const Hypothesis& prefix, const LookaheadConfig& cfg,
                   const Scorer& scorer, const DecodeConfig& dcfg) {
  RolloutSet out;
  auto add = [&](TokenSeq tokens) {
    out.scores.push_back(scorer(tokens, x.tokens));
    out.completions.push_back(std::move(tokens));
  };
  if (prefix.finished || (cfg.rollout_length && *cfg.rollout_length == 0)) {
    add(prefix.tokens);
    return out;
  }
  switch (cfg.rollout.kind) {
    case RolloutKind::kGreedy: {
      auto pick = [](std::span<const double> lp) { return argmax_token(lp); };
      add(limited_continue(model, x, prefix, dcfg, cfg.rollout_length, pick).tokens);
      break;
    }
    case RolloutKind::kSampling: {
      Rng rng(hash_tokens(dcfg.seed, prefix.tokens));
      auto pick = [&rng](std::span<const double> lp) { return nucleus_sample(lp, 1.0, rng); };
      add(limited_continue(model, x, prefix, dcfg, cfg.rollout_length, pick).tokens);
      break;
    }
    case RolloutKind::kBeam: {
      auto beams = beam_continue(model, x, prefix, BeamConfig{cfg.rollout.beam_width}, dcfg);
      for (auto& h : beams) {
        if (cfg.rollout_length) {
          const std::size_t keep = prefix.tokens.size() + static_cast<std::size_t>(*cfg.rollout_length);
          if (h.tokens.size() > keep) h.tokens.resize(keep);
        }
        add(std::move(h.tokens));
      }
      break;
    }
  }
  return out;
}

std::vector<Hypothesis> lookahead_decode(const ConditionalModel& model,
                                         const Document& x,
                                         const LookaheadConfig& cfg,
                                         const Scorer& scorer,
                                         const DecodeConfig& dcfg,
                                         LookaheadTrace* trace) {
  validate(cfg, model.vocab_size());
  validate(dcfg);
  const std::size_t k =
      cfg.base == LookaheadBase::kGreedy ? 1 : static_cast<std::size_t>(cfg.beam_width);
  const std::size_t pool_per_hyp =
      std::max(static_cast<std::size_t>(cfg.candidate_cap), k);
  const TokenId eos = model.eos_id();

  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> finished;
  std::vector<double> lp(model.vocab_size());

  while (!live.empty()) {
    std::vector<PoolItem> pool;
    for (std::size_t b = 0; b < live.size(); ++b) {
      model.next_token_logprobs(live[b].tokens, x, lp);
      const bool must_end =
          live[b].tokens.size() + 1 >= static_cast<std::size_t>(dcfg.max_length);
      std::vector<TokenId> toks = must_end ? std::vector<TokenId>{eos}
                                           : top_tokens(lp, pool_per_hyp);
      for (TokenId t : toks) {
        PoolItem item;
        item.entry.parent = b;
        item.entry.token = t;
        item.token_logprob = lp[static_cast<std::size_t>(t)];
        item.entry.logprob = live[b].logprob + item.token_logprob;
        pool.push_back(item);
      }
    }

    // Rollouts are pure functions of the extended prefix; memoize per step.
    std::map<TokenSeq, RolloutSet> memo;
    std::vector<RolloutSet> rollouts;
    rollouts.reserve(pool.size());
    for (PoolItem& item : pool) {
      Hypothesis ext = extend(live[item.entry.parent], item.entry.token,
                              item.token_logprob, eos);
      auto it = memo.find(ext.tokens);
      if (it == memo.end()) {
        it = memo.emplace(ext.tokens, rollout(model, x, ext, cfg, scorer, dcfg)).first;
      }
      item.entry.heuristic = it->second.best();
      item.entry.selection = item.entry.logprob + cfg.weight * item.entry.heuristic;
      if (trace) rollouts.push_back(it->second);
    }

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return selection_before(pool[a], pool[b]);
    });
    const std::size_t keep = std::min(k, order.size());

    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      PoolItem& item = pool[order[i]];
      item.entry.selected = true;
      Hypothesis h = extend(live[item.entry.parent], item.entry.token,
                            item.token_logprob, eos);
      if (h.finished) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }

    if (trace) {
      LookaheadStep step;
      for (const auto& h : live) step.live.push_back(h.tokens);
      for (const auto& item : pool) step.pool.push_back(item.entry);
      step.rollouts = std::move(rollouts);
      trace->steps.push_back(std::move(step));
    }
    live = std::move(next);

    if (finished.size() >= k && !live.empty()) {
      std::vector<double> scores;
      for (const auto& h : finished) {
        scores.push_back(length_adjusted_score(h, dcfg.length_penalty));
      }
      std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k - 1),
                       scores.end(), std::greater<>());
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& h : live) best_live = std::max(best_live, completion_bound(h, dcfg));
      if (scores[k - 1] >= best_live) break;
    }
  }

  std::stable_sort(finished.begin(), finished.end(),
                   [&](const Hypothesis& a, const Hypothesis& b) {
                     return length_adjusted_score(a, dcfg.length_penalty) >
                            length_adjusted_score(b, dcfg.length_penalty);
                   });
  if (finished.size() > k) finished.resize(k);
  return finished;
}

std::vector<ScoredCandidate> beam_lookahead_rank(const ConditionalModel& model,
                                                 const Document& x,
                                                 const LookaheadConfig& cfg,
                                                 const Scorer& lookahead_scorer,
                                                 const Scorer& rank_scorer,
                                                 const DecodeConfig& dcfg) {
  if (cfg.base != LookaheadBase::kBeam) {
    throw UsageError("beam_lookahead_rank requires a beam base");
  }
  return rank_candidates(lookahead_decode(model, x, cfg, lookahead_scorer, dcfg),
                         rank_scorer, x);
}

std::vector<MaxTopRow> max_top_analysis(const ConditionalModel& model,
                                        const std::vector<Document>& docs,
                                        const std::vector<int>& beam_sizes,
                                        const std::vector<Scorer>& scorers,
                                        const DecodeConfig& dcfg) {
  if (!std::is_sorted(beam_sizes.begin(), beam_sizes.end())) {
    throw UsageError("beam sizes must be ascending");
  }
  std::vector<MaxTopRow> rows;
  for (int k : beam_sizes) {
    std::vector<double> top(scorers.size(), 0.0);
    std::vector<double> best(scorers.size(), 0.0);
    for (const Document& doc : docs) {
      auto cands = beam_decode(model, doc, BeamConfig{k}, dcfg);
      for (std::size_t s = 0; s < scorers.size(); ++s) {
        double mx = -std::numeric_limits<double>::infinity();
        for (const auto& c : cands) mx = std::max(mx, scorers[s](c.tokens, doc.tokens));
        top[s] += scorers[s](cands.front().tokens, doc.tokens);
        best[s] += mx;
      }
    }
    for (std::size_t s = 0; s < scorers.size(); ++s) {
      const double n = static_cast<double>(docs.size());
      rows.push_back({k, scorers[s].name(), top[s] / n, best[s] / n});
    }
  }
  return rows;
}

std::vector<TokenSeq> prefix_chain(const TokenSeq& y) {
  std::vector<TokenSeq> out;
  for (std::size_t t = 0; t <= y.size(); ++t) out.emplace_back(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(t));
  return out;
}

std::vector<std::vector<double>> prefix_rollout_profile(
    const ConditionalModel& model, const Document& x,
    const std::vector<TokenSeq>& prefixes, const std::vector<Scorer>& scorers,
    const DecodeConfig& dcfg) {
  for (std::size_t t = 1; t < prefixes.size(); ++t) {
    const auto& a = prefixes[t - 1];
    const auto& b = prefixes[t];
    if (b.size() < a.size() || !std::equal(a.begin(), a.end(), b.begin())) {
      throw UsageError("prefix_rollout_profile needs nested prefixes");
    }
  }
  std::vector<std::vector<double>> series(scorers.size());
  for (const TokenSeq& p : prefixes) {
    Hypothesis start;
    start.tokens = p;
    start.finished = !p.empty() && p.back() == model.eos_id();
    Hypothesis done = greedy_continue(model, x, start, dcfg);
    for (std::size_t s = 0; s < scorers.size(); ++s) {
      series[s].push_back(scorers[s](done.tokens, x.tokens));
    }
  }
  return series;
}

}  // namespace faithdec
