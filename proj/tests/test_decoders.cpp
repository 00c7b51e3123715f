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

#include <cmath>
#include <set>

#include "faithdec/decoders.hpp"
#include "oracles.hpp"

using namespace faithdec;

namespace {

double max_prob_along(const ConditionalModel& m, const Document& x, const Hypothesis& h) {
  double lowest = 1.0;
  TokenSeq prefix;
  for (TokenId t : h.tokens) {
    auto lp = m.next_token_logprobs(prefix, x);
    double best = -1e300;
    for (double v : lp) best = std::max(best, v);
    lowest = std::min(lowest, std::exp(best));
    prefix.push_back(t);
  }
  return lowest;
}

}  // namespace

TEST_CASE("greedy stops immediately when EOS is the mode") {
  auto p = LogLinearParams::zeros(4);
  p.bias[1] = 5.0;
  LogLinearModel m(p, 0, 1);
  Hypothesis h = greedy_decode(m, Document{"x", {2}}, DecodeConfig{});
  CHECK(h.tokens == TokenSeq{1});
  CHECK(h.finished);
}

TEST_CASE("greedy follows the step-wise argmax of the oracle softmax") {
  Rng rng(21);
  DecodeConfig cfg;
  cfg.max_length = 4;
  for (int trial = 0; trial < 300; ++trial) {
    auto m = oracle::random_loglinear(4, 500 + static_cast<std::uint64_t>(trial), 2.0);
    Document x = oracle::random_doc(rng, 4, 2);
    Hypothesis h = greedy_decode(m, x, cfg);
    TokenSeq expect;
    long double lp = 0;
    while (expect.empty() || expect.back() != 1) {
      auto dist = oracle::loglinear_logprobs(m.params(), 0, expect, x.tokens);
      TokenId best = 0;
      if (static_cast<int>(expect.size()) + 1 >= cfg.max_length) {
        best = 1;
      } else {
        for (TokenId t = 1; t < 4; ++t) {
          if (dist[static_cast<std::size_t>(t)] > dist[static_cast<std::size_t>(best)]) best = t;
        }
      }
      lp += dist[static_cast<std::size_t>(best)];
      expect.push_back(best);
    }
    CHECK(h.tokens == expect);
    CHECK(std::abs(h.logprob - static_cast<double>(lp)) < 1e-12);
  }
}

TEST_CASE("beam of width one is greedy") {
  Rng rng(22);
  DecodeConfig cfg;
  cfg.max_length = 8;
  for (int trial = 0; trial < 1000; ++trial) {
    Document x = oracle::random_doc(rng, 7, 4);
    auto seed = 900 + static_cast<std::uint64_t>(trial);
    if (trial % 2 == 0) {
      auto m = oracle::random_loglinear(7, seed, 1.5);
      CHECK(beam_decode(m, x, BeamConfig{1}, cfg).front().tokens == greedy_decode(m, x, cfg).tokens);
    } else {
      HashedContextModel m(7, 0, 1, seed);
      CHECK(beam_decode(m, x, BeamConfig{1}, cfg).front().tokens == greedy_decode(m, x, cfg).tokens);
    }
  }
}

TEST_CASE("wide beam finds the exhaustive optimum") {
  Rng rng(23);
  DecodeConfig cfg;
  cfg.max_length = 3;
  const auto all = oracle::terminated_sequences(4, 1, 3);
  REQUIRE(all.size() == 13u);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = oracle::random_loglinear(4, 3000 + static_cast<std::uint64_t>(trial), 2.0);
    Document x = oracle::random_doc(rng, 4, 2);
    double best = -1e300;
    TokenSeq arg;
    for (const auto& y : all) {
      double s = oracle::loglinear_sequence_logprob(m.params(), 0, y, x.tokens);
      if (s > best) {
        best = s;
        arg = y;
      }
    }
    auto out = beam_decode(m, x, BeamConfig{64}, cfg);
    CHECK(out.front().tokens == arg);
    CHECK(std::abs(out.front().logprob - best) < 1e-12);
  }
}

TEST_CASE("beam output is sorted, finished and within length") {
  Rng rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    DecodeConfig cfg;
    cfg.max_length = 2 + static_cast<int>(rng.index(6));
    cfg.length_penalty = trial % 3 == 0 ? 1.0 : 0.0;
    HashedContextModel m(6, 0, 1, 70 + static_cast<std::uint64_t>(trial));
    Document x = oracle::random_doc(rng, 6, 3);
    auto out = beam_decode(m, x, BeamConfig{1 + static_cast<int>(rng.index(8))}, cfg);
    REQUIRE_FALSE(out.empty());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& h = out[i];
      CHECK(h.finished);
      CHECK(h.tokens.size() <= static_cast<std::size_t>(cfg.max_length));
      CHECK(std::count(h.tokens.begin(), h.tokens.end(), 1) == 1);
      CHECK(h.logprob <= 0.0);
      CHECK(std::abs(h.logprob - oracle::forced_logprob(m, h.tokens, x)) < 1e-10);
      if (i > 0) {
        CHECK(length_adjusted_score(out[i - 1], cfg.length_penalty) >=
              length_adjusted_score(h, cfg.length_penalty));
      }
    }
  }
}

TEST_CASE("wider beams rarely lose") {
  Rng rng(25);
  DecodeConfig cfg;
  cfg.max_length = 6;
  int ok = 0;
  for (int trial = 0; trial < 500; ++trial) {
    HashedContextModel m(8, 0, 1, 4000 + static_cast<std::uint64_t>(trial));
    Document x = oracle::random_doc(rng, 8, 3);
    const int k = 1 + static_cast<int>(rng.index(5));
    double a = beam_decode(m, x, BeamConfig{k}, cfg).front().logprob;
    double b = beam_decode(m, x, BeamConfig{k + 1 + static_cast<int>(rng.index(4))}, cfg).front().logprob;
    if (b >= a) ++ok;
  }
  CHECK(ok >= 475);
}

TEST_CASE("nucleus below the smallest step maximum is greedy") {
  Rng rng(26);
  DecodeConfig cfg;
  cfg.max_length = 8;
  for (int trial = 0; trial < 1000; ++trial) {
    auto m = oracle::random_loglinear(6, 6000 + static_cast<std::uint64_t>(trial), 2.0);
    Document x = oracle::random_doc(rng, 6, 3);
    Hypothesis g = greedy_decode(m, x, cfg);
    cfg.seed = static_cast<std::uint64_t>(trial);
    double p = max_prob_along(m, x, g);
    CHECK(nucleus_decode(m, x, NucleusConfig{p}, cfg).tokens == g.tokens);
  }
}

TEST_CASE("nucleus at one half is greedy when the mode always holds half the mass") {
  auto p = LogLinearParams::zeros(5);
  p.trans(0, 2) = 4.0;
  p.trans(2, 3) = 4.0;
  p.trans(3, 4) = 4.0;
  p.trans(4, 1) = 4.0;
  LogLinearModel m(p, 0, 1);
  DecodeConfig cfg;
  cfg.max_length = 10;
  Document x{"x", {2}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    cfg.seed = seed;
    CHECK(nucleus_decode(m, x, NucleusConfig{0.5}, cfg).tokens == greedy_decode(m, x, cfg).tokens);
  }
}

TEST_CASE("nucleus sampling at top_p=1 follows the model distribution") {
  auto m = oracle::random_loglinear(6, 17, 1.0);
  Document x{"x", {2, 3}};
  auto lp = m.next_token_logprobs(TokenSeq{2}, x);
  Rng rng(99);
  std::vector<int> counts(6, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(nucleus_sample(lp, 1.0, rng))];
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(std::abs(counts[t] / static_cast<double>(draws) - std::exp(lp[t])) < 0.01);
  }
}

TEST_CASE("nucleus decoding is seeded") {
  LogLinearModel m(8, 0, 1);  // uniform
  Document x{"x", {2}};
  DecodeConfig cfg;
  cfg.max_length = 8;
  cfg.seed = 5;
  auto a = nucleus_decode(m, x, NucleusConfig{0.9}, cfg);
  CHECK(a == nucleus_decode(m, x, NucleusConfig{0.9}, cfg));
  std::set<TokenSeq> distinct;
  for (std::uint64_t s = 0; s < 10; ++s) {
    cfg.seed = s;
    distinct.insert(nucleus_decode(m, x, NucleusConfig{0.9}, cfg).tokens);
  }
  CHECK(distinct.size() >= 2u);
}

TEST_CASE("nucleus sets shrink with top_p") {
  Rng rng(27);
  for (int trial = 0; trial < 300; ++trial) {
    auto m = oracle::random_loglinear(8, 7000 + static_cast<std::uint64_t>(trial), 1.5);
    auto lp = m.next_token_logprobs(TokenSeq{}, oracle::random_doc(rng, 8, 3));
    double lo = rng.uniform01(), hi = rng.uniform01();
    if (lo > hi) std::swap(lo, hi);
    lo = std::max(lo, 1e-6);
    hi = std::max(hi, lo);
    auto small = nucleus_set(lp, lo);
    auto big = nucleus_set(lp, hi);
    std::set<TokenId> b(big.begin(), big.end());
    for (TokenId t : small) CHECK(b.count(t) == 1u);

    // Shortest prefix reaching the mass, boundary token included.
    double mass = 0;
    for (TokenId t : big) mass += std::exp(lp[static_cast<std::size_t>(t)]);
    CHECK(mass >= hi - 1e-12);
    CHECK(mass - std::exp(lp[static_cast<std::size_t>(big.back())]) < hi);
  }
}

TEST_CASE("greedy model calls equal the output length") {
  Rng rng(28);
  for (int trial = 0; trial < 50; ++trial) {
    HashedContextModel m(6, 0, 1, 50 + static_cast<std::uint64_t>(trial));
    m.reset_calls();
    auto h = greedy_decode(m, oracle::random_doc(rng, 6, 3), DecodeConfig{});
    CHECK(m.calls() == h.tokens.size());
  }
}

TEST_CASE("beam calls are one per live hypothesis per step") {
  Rng rng(29);
  DecodeConfig cfg;
  cfg.max_length = 7;
  for (int trial = 0; trial < 50; ++trial) {
    HashedContextModel m(6, 0, 1, 80 + static_cast<std::uint64_t>(trial));
    m.reset_calls();
    const int k = 4;
    auto out = beam_decode(m, oracle::random_doc(rng, 6, 3), BeamConfig{k}, cfg);
    CHECK(m.calls() <= static_cast<std::uint64_t>(cfg.max_length * k));
    CHECK(m.calls() >= out.front().tokens.size());
  }
}

TEST_CASE("decoder configs are validated") {
  DecodeConfig d;
  d.max_length = 0;
  CHECK_THROWS_AS(validate(d), ConfigError);
  CHECK_THROWS_AS(validate(BeamConfig{0}), ConfigError);
  CHECK_THROWS_AS(validate(NucleusConfig{0.0}), ConfigError);
  CHECK_THROWS_AS(validate(NucleusConfig{1.5}), ConfigError);
}
