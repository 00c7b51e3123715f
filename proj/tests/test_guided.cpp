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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faithdec/guided.hpp"
#include "oracles.hpp"

using namespace faithdec;

namespace {

LookaheadConfig greedy_base(double w, int c) {
  LookaheadConfig cfg;
  cfg.base = LookaheadBase::kGreedy;
  cfg.weight = w;
  cfg.candidate_cap = c;
  return cfg;
}

}  // namespace

TEST_CASE("ranking a single candidate") {
  Hypothesis h{{2, 1}, -0.3, true};
  auto out = rank_candidates({h}, make_scorer("precision", 1), Document{"x", {3}});
  REQUIRE(out.size() == 1u);
  CHECK(out[0].hypothesis == h);
  CHECK(out[0].source_rank == 0);
  CHECK(out[0].rank_score == out[0].metric_scores.at("precision"));
}

TEST_CASE("ranking by the model score keeps the beam order") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    HashedContextModel m(7, 0, 1, 100 + static_cast<std::uint64_t>(trial));
    Document x = oracle::random_doc(rng, 7, 3);
    DecodeConfig cfg;
    cfg.max_length = 6;
    auto beam = beam_decode(m, x, BeamConfig{5}, cfg);
    auto ranked = rank_candidates(beam, model_score_scorer(m), x);
    for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(ranked[i].source_rank == static_cast<int>(i));
  }
}

TEST_CASE("ranking promotes the faithful candidate") {
  Vocabulary v = oracle::letters(17);  // a..q
  const TokenId a = v.id("a"), b = v.id("b"), q = v.id("q");
  Document x{"x", {a, b}};
  std::vector<Hypothesis> beam{{{a, q, 1}, -1.0, true}, {{a, b, 1}, -1.5, true}};
  auto out = rank_candidates(beam, make_scorer("precision", 1), x);
  CHECK(out[0].hypothesis.tokens == TokenSeq{a, b, 1});
  CHECK(out[0].rank_score == 1.0);
  CHECK(out[0].source_rank == 1);
  CHECK(out[1].rank_score == 0.5);
}

TEST_CASE("ranking never lowers the chosen score") {
  Rng rng(42);
  for (const std::string name : {"precision", "novelty", "composite", "dae", "questeval"}) {
    Scorer s = make_scorer(name, 1);
    for (int trial = 0; trial < 100; ++trial) {
      HashedContextModel m(9, 0, 1, 300 + static_cast<std::uint64_t>(trial), 2.0, 1.0);
      Document x = oracle::random_doc(rng, 9, 4);
      auto beam = beam_decode(m, x, BeamConfig{6}, DecodeConfig{});
      auto ranked = rank_candidates(beam, s, x);
      CHECK(ranked[0].rank_score >= s(beam[0].tokens, x.tokens));
      for (const auto& c : ranked) CHECK(ranked[0].rank_score >= c.rank_score);
      std::vector<int> ranks;
      for (const auto& c : ranked) ranks.push_back(c.source_rank);
      std::sort(ranks.begin(), ranks.end());
      for (std::size_t i = 0; i < ranks.size(); ++i) CHECK(ranks[i] == static_cast<int>(i));
    }
  }
}

TEST_CASE("lookahead with zero weight is the base decoder") {
  Rng rng(43);
  DecodeConfig dcfg;
  dcfg.max_length = 7;
  Scorer prec = make_scorer("precision", 1);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = oracle::random_loglinear(8, 500 + static_cast<std::uint64_t>(trial), 1.5);
    Document x = oracle::random_doc(rng, 8, 3);
    const int c = 1 + static_cast<int>(rng.index(8));
    auto g = lookahead_decode(m, x, greedy_base(0.0, c), prec, dcfg);
    CHECK(g.front().tokens == greedy_decode(m, x, dcfg).tokens);

    LookaheadConfig bc = greedy_base(0.0, c);
    bc.base = LookaheadBase::kBeam;
    bc.beam_width = 1 + static_cast<int>(rng.index(6));
    auto beam = beam_decode(m, x, BeamConfig{bc.beam_width}, dcfg);
    auto la = lookahead_decode(m, x, bc, prec, dcfg);
    REQUIRE(la.size() == beam.size());
    for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i].tokens == beam[i].tokens);
  }
}

TEST_CASE("lookahead picks the token whose future is faithful") {
  Vocabulary v = oracle::letters(3);  // <s> </s> a b c ; c plays the unsupported token
  const TokenId a = v.id("a"), b = v.id("b"), q = v.id("c"), eos = v.eos_id();
  auto p = LogLinearParams::zeros(5);
  p.trans(0, q) = 3.0;  // greedy opens with the unsupported token
  p.trans(0, a) = 2.0;
  p.trans(q, a) = 4.0;
  p.trans(a, b) = 4.0;
  p.trans(b, eos) = 4.0;
  LogLinearModel m(p, 0, 1);
  Document x{"x", {a, b}};
  DecodeConfig dcfg;
  dcfg.max_length = 4;

  Hypothesis g = greedy_decode(m, x, dcfg);
  REQUIRE(g.tokens.front() == q);
  CHECK(oracle::precision_oracle(g.tokens, x.tokens, eos) < 1.0);

  LookaheadTrace trace;
  auto la = lookahead_decode(m, x, greedy_base(50.0, 5), make_scorer("precision", eos), dcfg, &trace);
  CHECK(la.front().tokens.front() == a);
  CHECK(oracle::precision_oracle(la.front().tokens, x.tokens, eos) == 1.0);

  TokenSeq prefix;
  double lp = 0;
  for (const auto& step : trace.steps) {
    std::map<TokenId, double> f;
    TokenId want = oracle::lookahead_step_oracle(m, x, prefix, lp, 5, 50.0, dcfg.max_length, f);
    for (const auto& e : step.pool) {
      CHECK(std::abs(e.selection - f.at(e.token)) < 1e-12);
      if (e.selected) {
        CHECK(e.token == want);
        prefix.push_back(e.token);
        lp = e.logprob;
      }
    }
  }
  CHECK(prefix == la.front().tokens);
}

TEST_CASE("lookahead steps agree with an independent recomputation") {
  Rng rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = oracle::random_loglinear(5, 800 + static_cast<std::uint64_t>(trial), 2.0);
    Document x = oracle::random_doc(rng, 5, 2);
    DecodeConfig dcfg;
    dcfg.max_length = 3 + static_cast<int>(rng.index(4));
    const int c = 1 + static_cast<int>(rng.index(5));
    const double w = 0.5 + 10.0 * rng.uniform01();
    LookaheadTrace trace;
    auto out = lookahead_decode(m, x, greedy_base(w, c), make_scorer("precision", 1), dcfg, &trace);
    TokenSeq prefix;
    double lp = 0;
    for (const auto& step : trace.steps) {
      std::map<TokenId, double> f;
      TokenId want = oracle::lookahead_step_oracle(m, x, prefix, lp, c, w, dcfg.max_length, f);
      CHECK(step.pool.size() == f.size());
      for (const auto& e : step.pool) {
        CHECK(std::abs(e.selection - f.at(e.token)) < 1e-12);
        if (e.selected) {
          CHECK(e.token == want);
          prefix.push_back(e.token);
          lp = e.logprob;
        }
      }
    }
    CHECK(prefix == out.front().tokens);
  }
}

TEST_CASE("scoring only the prefix with a constant scorer changes nothing") {
  Rng rng(45);
  Scorer constant("constant", [](std::span<const TokenId>, std::span<const TokenId>) { return 0.7; });
  DecodeConfig dcfg;
  dcfg.max_length = 6;
  for (int trial = 0; trial < 100; ++trial) {
    auto m = oracle::random_loglinear(7, 900 + static_cast<std::uint64_t>(trial), 1.5);
    Document x = oracle::random_doc(rng, 7, 3);
    LookaheadConfig cfg = greedy_base(20.0, 4);
    cfg.rollout_length = 0;
    CHECK(lookahead_decode(m, x, cfg, constant, dcfg).front().tokens == greedy_decode(m, x, dcfg).tokens);
    cfg.base = LookaheadBase::kBeam;
    cfg.beam_width = 3;
    auto beam = beam_decode(m, x, BeamConfig{3}, dcfg);
    auto la = lookahead_decode(m, x, cfg, constant, dcfg);
    REQUIRE(la.size() == beam.size());
    for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i].tokens == beam[i].tokens);
  }
}

TEST_CASE("shifting the heuristic by a constant keeps the output") {
  Rng rng(46);
  Scorer prec = make_scorer("precision", 1);
  Scorer shifted("shifted", [](std::span<const TokenId> y, std::span<const TokenId> s) {
    return source_precision(y, s) + 0.5;
  }, 1);
  DecodeConfig dcfg;
  dcfg.max_length = 6;
  for (int trial = 0; trial < 100; ++trial) {
    auto m = oracle::random_loglinear(7, 1100 + static_cast<std::uint64_t>(trial), 1.5);
    Document x = oracle::random_doc(rng, 7, 3);
    LookaheadConfig cfg = greedy_base(4.0, 3);
    CHECK(lookahead_decode(m, x, cfg, prec, dcfg).front().tokens ==
          lookahead_decode(m, x, cfg, shifted, dcfg).front().tokens);
    cfg.base = LookaheadBase::kBeam;
    cfg.beam_width = 3;
    auto a = lookahead_decode(m, x, cfg, prec, dcfg);
    auto b = lookahead_decode(m, x, cfg, shifted, dcfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].tokens == b[i].tokens);
  }
}

TEST_CASE("rollouts extend their prefix") {
  Rng rng(47);
  Scorer prec = make_scorer("precision", 1);
  DecodeConfig dcfg;
  dcfg.max_length = 8;
  for (int trial = 0; trial < 60; ++trial) {
    HashedContextModel m(9, 0, 1, 1200 + static_cast<std::uint64_t>(trial));
    Document x = oracle::random_doc(rng, 9, 3);
    Hypothesis prefix;
    prefix.tokens = oracle::random_tokens(rng, 1 + rng.index(3), 2, 9);
    for (RolloutKind kind : {RolloutKind::kGreedy, RolloutKind::kSampling, RolloutKind::kBeam}) {
      LookaheadConfig cfg;
      cfg.rollout.kind = kind;
      cfg.rollout.beam_width = 3;
      if (trial % 2) cfg.rollout_length = 2;
      RolloutSet r = rollout(m, x, prefix, cfg, prec, dcfg);
      CHECK(r.completions.size() == (kind == RolloutKind::kBeam ? 3u : 1u));
      CHECK(r.scores.size() == r.completions.size());
      for (std::size_t i = 0; i < r.completions.size(); ++i) {
        const auto& y = r.completions[i];
        REQUIRE(y.size() >= prefix.tokens.size());
        CHECK(std::equal(prefix.tokens.begin(), prefix.tokens.end(), y.begin()));
        if (cfg.rollout_length) CHECK(y.size() <= prefix.tokens.size() + 2);
        CHECK(r.scores[i] == prec(y, x.tokens));
      }
    }
  }
}

TEST_CASE("sampling rollouts are reproducible") {
  HashedContextModel m(9, 0, 1, 5);
  Document x{"x", {2, 3, 4}};
  Hypothesis prefix{{2}, -0.1, false};
  LookaheadConfig cfg;
  cfg.rollout.kind = RolloutKind::kSampling;
  DecodeConfig dcfg;
  dcfg.seed = 9;
  auto s = make_scorer("precision", 1);
  CHECK(rollout(m, x, prefix, cfg, s, dcfg).completions == rollout(m, x, prefix, cfg, s, dcfg).completions);
}

TEST_CASE("beam lookahead with ranking") {
  Rng rng(48);
  Scorer prec = make_scorer("precision", 1);
  Scorer comp = make_scorer("composite", 1);
  DecodeConfig dcfg;
  dcfg.max_length = 6;
  for (int trial = 0; trial < 50; ++trial) {
    auto m = oracle::random_loglinear(8, 1300 + static_cast<std::uint64_t>(trial), 1.5);
    Document x = oracle::random_doc(rng, 8, 3);
    LookaheadConfig cfg = greedy_base(5.0, 3);
    cfg.base = LookaheadBase::kBeam;
    cfg.beam_width = 1;
    auto one = beam_lookahead_rank(m, x, cfg, prec, comp, dcfg);
    CHECK(one.front().hypothesis.tokens == lookahead_decode(m, x, cfg, prec, dcfg).front().tokens);

    cfg.beam_width = 4;
    auto ranked = beam_lookahead_rank(m, x, cfg, prec, comp, dcfg);
    auto plain = lookahead_decode(m, x, cfg, prec, dcfg);
    CHECK(ranked.front().rank_score >= comp(plain.front().tokens, x.tokens));
    for (const auto& c : ranked) CHECK(ranked.front().rank_score >= c.rank_score);
  }
  LookaheadConfig g = greedy_base(5.0, 3);
  CHECK_THROWS_AS(beam_lookahead_rank(oracle::random_loglinear(8, 1, 1.0), Document{"x", {2}}, g, prec,
                                      comp, dcfg),
                  UsageError);
}

TEST_CASE("lookahead config validation") {
  LookaheadConfig cfg;
  cfg.weight = -1;
  CHECK_THROWS_AS(validate(cfg, 8), ConfigError);
  cfg = LookaheadConfig{};
  cfg.candidate_cap = 9;
  CHECK_THROWS_AS(validate(cfg, 8), ConfigError);
  cfg = LookaheadConfig{};
  cfg.rollout_length = -2;
  CHECK_THROWS_AS(validate(cfg, 8), ConfigError);
}

TEST_CASE("a full lookahead step costs at least c greedy steps") {
  Rng rng(49);
  DecodeConfig dcfg;
  dcfg.max_length = 10;
  Scorer prec = make_scorer("precision", 1);
  for (int trial = 0; trial < 50; ++trial) {
    HashedContextModel m(9, 0, 1, 1400 + static_cast<std::uint64_t>(trial), 2.0, 1.0);
    Document x = oracle::random_doc(rng, 9, 4);
    LookaheadTrace trace;
    m.reset_calls();
    lookahead_decode(m, x, greedy_base(5.0, 5), prec, dcfg, &trace);
    std::uint64_t counted = 0;
    for (const auto& step : trace.steps) {
      std::uint64_t calls = step.live.size();
      for (std::size_t i = 0; i < step.pool.size(); ++i) {
        const auto ext = step.live[step.pool[i].parent].size() + 1;
        calls += step.rollouts[i].completions.front().size() - ext;
      }
      counted += calls;
      if (step.pool.size() == 5u) CHECK(calls >= 5u);
    }
    CHECK(m.calls() == counted);
  }
}

TEST_CASE("max/top analysis") {
  Rng rng(50);
  HashedContextModel m(10, 0, 1, 77, 2.0, 1.5);
  std::vector<Document> docs;
  for (int i = 0; i < 30; ++i) docs.push_back(oracle::random_doc(rng, 10, 6));
  std::vector<Scorer> scorers{make_scorer("precision", 1), make_scorer("composite", 1)};
  DecodeConfig dcfg;
  dcfg.max_length = 8;
  auto rows = max_top_analysis(m, docs, {1, 2, 4}, scorers, dcfg);
  REQUIRE(rows.size() == 6u);
  for (const auto& r : rows) {
    CHECK(r.mean_max >= r.mean_top);
    if (r.beam_size == 1) CHECK(r.mean_max == r.mean_top);
  }
  // Recompute one row from the full candidate lists.
  double top = 0, best = 0;
  for (const auto& d : docs) {
    auto cands = beam_decode(m, d, BeamConfig{4}, dcfg);
    std::vector<double> s;
    for (const auto& c : cands) s.push_back(scorers[1](c.tokens, d.tokens));
    top += s.front();
    best += *std::max_element(s.begin(), s.end());
  }
  CHECK(rows[5].beam_size == 4);
  CHECK(rows[5].mean_top == top / 30.0);
  CHECK(rows[5].mean_max == best / 30.0);
  CHECK_THROWS_AS(max_top_analysis(m, docs, {4, 2}, scorers, dcfg), UsageError);
}

TEST_CASE("prefix rollout profile") {
  Rng rng(51);
  Scorer prec = make_scorer("precision", 1);
  DecodeConfig dcfg;
  dcfg.max_length = 9;
  for (int trial = 0; trial < 40; ++trial) {
    HashedContextModel m(9, 0, 1, 1500 + static_cast<std::uint64_t>(trial), 2.0, 1.0);
    Document x = oracle::random_doc(rng, 9, 4);
    LookaheadTrace trace;
    auto la = lookahead_decode(m, x, greedy_base(3.0, 4), prec, dcfg, &trace);
    const TokenSeq& y = la.front().tokens;
    auto prefixes = prefix_chain(y);
    REQUIRE(prefixes.size() == y.size() + 1);
    auto series = prefix_rollout_profile(m, x, prefixes, {prec}, dcfg);
    REQUIRE(series[0].size() == prefixes.size());
    CHECK(series[0].front() == prec(greedy_decode(m, x, dcfg).tokens, x.tokens));
    CHECK(series[0].back() == prec(y, x.tokens));
    // Step t selected y_{t+1}; its recorded heuristic scored the greedy
    // completion of prefix t+1.
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
      for (const auto& e : trace.steps[t].pool) {
        if (e.selected) CHECK(e.heuristic == series[0][t + 1]);
      }
    }
  }
  CHECK_THROWS_AS(prefix_rollout_profile(oracle::random_loglinear(5, 1, 1.0), Document{"x", {2}},
                                         {{2, 3}, {3}}, {prec}, DecodeConfig{}),
                  UsageError);
}
