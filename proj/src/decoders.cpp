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

#include "faithdec/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace faithdec {

void validate(const DecodeConfig& cfg) {
  if (cfg.max_length < 1) throw ConfigError("max_length must be >= 1");
  if (!std::isfinite(cfg.length_penalty)) {
    throw ConfigError("length_penalty must be finite");
  }
}

void validate(const BeamConfig& cfg) {
  if (cfg.width < 1) throw ConfigError("beam width must be >= 1");
}

void validate(const NucleusConfig& cfg) {
  if (!(cfg.top_p > 0.0 && cfg.top_p <= 1.0)) {
    throw ConfigError("top_p must be in (0, 1]");
  }
}

TokenId argmax_token(std::span<const double> logprobs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logprobs.size(); ++i) {
    if (logprobs[i] > logprobs[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

double length_adjusted_score(const Hypothesis& h, double length_penalty) {
  if (length_penalty == 0.0 || h.tokens.empty()) return h.logprob;
  return h.logprob / std::pow(static_cast<double>(h.tokens.size()), length_penalty);
}

namespace {

void check_start(const Hypothesis& start, const DecodeConfig& cfg) {
  validate(cfg);
  if (!start.finished &&
      start.tokens.size() >= static_cast<std::size_t>(cfg.max_length)) {
    throw UsageError("prefix already holds max_length tokens without EOS");
  }
}

bool must_end(const Hypothesis& h, const DecodeConfig& cfg) {
  return h.tokens.size() + 1 >= static_cast<std::size_t>(cfg.max_length);
}

// Upper bound on the final adjusted score any completion of `h` can reach.
double completion_bound(const Hypothesis& h, const DecodeConfig& cfg) {
  if (cfg.length_penalty == 0.0) return h.logprob;
  const double shortest = static_cast<double>(h.tokens.size() + 1);
  const double longest = static_cast<double>(cfg.max_length);
  // logprob <= h.logprob <= 0, so dividing by the largest length^penalty wins.
  const double denom = cfg.length_penalty > 0.0
                           ? std::pow(longest, cfg.length_penalty)
                           : std::pow(shortest, cfg.length_penalty);
  return h.logprob / denom;
}

struct Extension {
  double score;
  std::size_t parent;
  TokenId token;
  double token_logprob;
};

bool extension_before(const Extension& a, const Extension& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.parent != b.parent) return a.parent < b.parent;
  return a.token < b.token;
}

}  // namespace

Hypothesis greedy_decode(const ConditionalModel& model, const Document& x,
                         const DecodeConfig& cfg) {
  return greedy_continue(model, x, Hypothesis{}, cfg);
}

Hypothesis greedy_continue(const ConditionalModel& model, const Document& x,
                           const Hypothesis& start, const DecodeConfig& cfg) {
  check_start(start, cfg);
  Hypothesis h = start;
  std::vector<double> lp(model.vocab_size());
  while (!h.finished) {
    model.next_token_logprobs(h.tokens, x, lp);
    TokenId tok = must_end(h, cfg) ? model.eos_id() : argmax_token(lp);
    h = extend(h, tok, lp[static_cast<std::size_t>(tok)], model.eos_id());
  }
  return h;
}

std::vector<Hypothesis> beam_decode(const ConditionalModel& model,
                                    const Document& x, const BeamConfig& beam,
                                    const DecodeConfig& cfg) {
  return beam_continue(model, x, Hypothesis{}, beam, cfg);
}

std::vector<Hypothesis> beam_continue(const ConditionalModel& model,
                                      const Document& x, const Hypothesis& start,
                                      const BeamConfig& beam,
                                      const DecodeConfig& cfg) {
  validate(beam);
  check_start(start, cfg);
  if (start.finished) return {start};

  const auto k = static_cast<std::size_t>(beam.width);
  const TokenId eos = model.eos_id();
  const std::size_t v = model.vocab_size();

  std::vector<Hypothesis> live{start};
  std::vector<Hypothesis> finished;  // insertion order = source order for ties
  std::vector<double> lp(v);
  std::vector<Extension> cands;

  while (!live.empty()) {
    cands.clear();
    for (std::size_t b = 0; b < live.size(); ++b) {
      model.next_token_logprobs(live[b].tokens, x, lp);
      if (must_end(live[b], cfg)) {
        cands.push_back({live[b].logprob + lp[eos], b, eos, lp[eos]});
        continue;
      }
      for (std::size_t t = 0; t < v; ++t) {
        cands.push_back({live[b].logprob + lp[t], b, static_cast<TokenId>(t), lp[t]});
      }
    }
    const std::size_t keep = std::min(k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                      cands.end(), extension_before);

    std::vector<Hypothesis> next;
    next.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
      const Extension& e = cands[i];
      Hypothesis h = extend(live[e.parent], e.token, e.token_logprob, eos);
      if (h.finished) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);

    if (finished.size() >= k && !live.empty()) {
      std::vector<double> scores;
      scores.reserve(finished.size());
      for (const auto& h : finished) {
        scores.push_back(length_adjusted_score(h, cfg.length_penalty));
      }
      std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k - 1),
                       scores.end(), std::greater<>());
      const double kth = scores[k - 1];
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& h : live) best_live = std::max(best_live, completion_bound(h, cfg));
      if (kth >= best_live) break;
    }
  }

  std::vector<std::size_t> order(finished.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return length_adjusted_score(finished[a], cfg.length_penalty) >
           length_adjusted_score(finished[b], cfg.length_penalty);
  });
  std::vector<Hypothesis> out;
  for (std::size_t i = 0; i < order.size() && i < k; ++i) {
    out.push_back(std::move(finished[order[i]]));
  }
  return out;
}

std::vector<TokenId> nucleus_set(std::span<const double> logprobs, double top_p) {
  std::vector<TokenId> order(logprobs.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return logprobs[static_cast<std::size_t>(a)] > logprobs[static_cast<std::size_t>(b)];
  });
  double mass = 0.0;
  std::size_t n = 0;
  while (n < order.size()) {
    mass += std::exp(logprobs[static_cast<std::size_t>(order[n])]);
    ++n;
    if (mass >= top_p) break;
  }
  order.resize(n);
  return order;
}

TokenId nucleus_sample(std::span<const double> logprobs, double top_p, Rng& rng) {
  std::vector<TokenId> nucleus = nucleus_set(logprobs, top_p);
  double mass = 0.0;
  for (TokenId t : nucleus) mass += std::exp(logprobs[static_cast<std::size_t>(t)]);
  const double u = rng.uniform01() * mass;
  double acc = 0.0;
  for (TokenId t : nucleus) {
    acc += std::exp(logprobs[static_cast<std::size_t>(t)]);
    if (u < acc) return t;
  }
  return nucleus.back();
}

Hypothesis nucleus_decode(const ConditionalModel& model, const Document& x,
                          const NucleusConfig& nuc, const DecodeConfig& cfg) {
  Rng rng(cfg.seed);
  return nucleus_continue(model, x, Hypothesis{}, nuc, rng, cfg);
}

Hypothesis nucleus_continue(const ConditionalModel& model, const Document& x,
                            const Hypothesis& start, const NucleusConfig& nuc,
                            Rng& rng, const DecodeConfig& cfg) {
  validate(nuc);
  check_start(start, cfg);
  Hypothesis h = start;
  std::vector<double> lp(model.vocab_size());
  while (!h.finished) {
    model.next_token_logprobs(h.tokens, x, lp);
    TokenId tok = must_end(h, cfg) ? model.eos_id() : nucleus_sample(lp, nuc.top_p, rng);
    h = extend(h, tok, lp[static_cast<std::size_t>(tok)], model.eos_id());
  }
  return h;
}

}  // namespace faithdec
