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

// Reference computations for the tests. Nothing here calls into the code
// under test except to read parameters or query a model's distribution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "faithdec/core.hpp"
#include "faithdec/model.hpp"
#include "faithdec/random.hpp"

namespace oracle {

using faithdec::TokenId;
using faithdec::TokenSeq;

inline faithdec::Vocabulary letters(int content) {
  std::vector<std::string> t{"<s>", "</s>"};
  for (int i = 0; i < content; ++i) t.push_back(std::string(1, static_cast<char>('a' + i)));
  return faithdec::Vocabulary(t, 0, 1);
}

// Two-pass softmax in long double.
inline std::vector<double> log_softmax(const std::vector<double>& logits) {
  long double m = logits[0];
  for (double v : logits) m = std::max<long double>(m, v);
  long double z = 0;
  for (double v : logits) z += std::exp(static_cast<long double>(v) - m);
  std::vector<double> out;
  for (double v : logits) out.push_back(static_cast<double>(v - m - std::log(z)));
  return out;
}

inline std::vector<double> loglinear_logprobs(const faithdec::LogLinearParams& p, TokenId bos,
                                              const TokenSeq& prefix, const TokenSeq& source) {
  const std::size_t V = p.vocab_size;
  const std::size_t prev = static_cast<std::size_t>(prefix.empty() ? bos : prefix.back());
  std::vector<double> logits(V);
  for (std::size_t v = 0; v < V; ++v) {
    bool in_src = std::find(source.begin(), source.end(), static_cast<TokenId>(v)) != source.end();
    logits[v] = p.bias[v] + p.transition[prev * V + v] + (in_src ? p.copy_gate[v] : 0.0);
  }
  return log_softmax(logits);
}

inline double loglinear_sequence_logprob(const faithdec::LogLinearParams& p, TokenId bos,
                                         const TokenSeq& y, const TokenSeq& source) {
  long double total = 0;
  TokenSeq prefix;
  for (TokenId t : y) {
    total += loglinear_logprobs(p, bos, prefix, source)[static_cast<std::size_t>(t)];
    prefix.push_back(t);
  }
  return static_cast<double>(total);
}

// Model-agnostic version through the public distribution only.
inline double forced_logprob(const faithdec::ConditionalModel& m, const TokenSeq& y,
                             const faithdec::Document& x) {
  long double total = 0;
  TokenSeq prefix;
  for (TokenId t : y) {
    total += m.next_token_logprobs(prefix, x)[static_cast<std::size_t>(t)];
    prefix.push_back(t);
  }
  return static_cast<double>(total);
}

// Every EOS-terminated sequence with at most max_len tokens (EOS included).
inline std::vector<TokenSeq> terminated_sequences(int V, TokenId eos, int max_len) {
  std::vector<TokenSeq> out;
  std::vector<TokenSeq> frontier{{}};
  for (int len = 0; len < max_len; ++len) {
    std::vector<TokenSeq> next;
    for (const auto& s : frontier) {
      TokenSeq done = s;
      done.push_back(eos);
      out.push_back(done);
      if (len + 1 < max_len) {
        for (TokenId t = 0; t < V; ++t) {
          if (t == eos) continue;
          TokenSeq e = s;
          e.push_back(t);
          next.push_back(e);
        }
      }
    }
    frontier = std::move(next);
  }
  return out;
}

inline bool is_subsequence(const TokenSeq& s, const TokenSeq& of) {
  std::size_t j = 0;
  for (TokenId t : of) {
    if (j < s.size() && s[j] == t) ++j;
  }
  return j == s.size();
}

// Longest common subsequence by trying every subsequence of a.
inline std::size_t lcs_exhaustive(const TokenSeq& a, const TokenSeq& b) {
  std::size_t best = 0;
  const std::uint32_t n = static_cast<std::uint32_t>(a.size());
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    TokenSeq s;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) s.push_back(a[i]);
    }
    if (s.size() > best && is_subsequence(s, b)) best = s.size();
  }
  return best;
}

inline double f1_from_lcs(std::size_t l, std::size_t na, std::size_t nb) {
  if (l == 0 || na == 0 || nb == 0) return 0.0;
  const double p = static_cast<double>(l) / static_cast<double>(na);
  const double r = static_cast<double>(l) / static_cast<double>(nb);
  return 2 * p * r / (p + r);
}

inline faithdec::LogLinearModel random_loglinear(std::size_t V, std::uint64_t seed,
                                                 double scale = 1.0) {
  return faithdec::LogLinearModel::random_init(V, 0, 1, seed, scale);
}

inline TokenSeq random_tokens(faithdec::Rng& rng, std::size_t n, int lo, int hi) {
  TokenSeq s;
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back(static_cast<TokenId>(lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo)))));
  }
  return s;
}

inline faithdec::Document random_doc(faithdec::Rng& rng, std::size_t V, std::size_t len) {
  return faithdec::Document{"d", random_tokens(rng, len, 2, static_cast<int>(V))};
}

// Largest relative error between an analytic gradient and central differences
// of `loss` over the listed parameter indices. The denominator is floored at
// 1e-3, so entries below that magnitude are held to an absolute 1e-7.
inline double max_rel_fd_error(faithdec::LogLinearModel model,
                               const std::function<double(const faithdec::LogLinearModel&)>& loss,
                               const faithdec::LogLinearParams& grad,
                               const std::vector<std::size_t>& indices, double eps = 1e-5) {
  double worst = 0.0;
  for (std::size_t i : indices) {
    const double x0 = model.params().at(i);
    model.mutable_params().at(i) = x0 + eps;
    const double up = loss(model);
    model.mutable_params().at(i) = x0 - eps;
    const double down = loss(model);
    model.mutable_params().at(i) = x0;
    const double fd = (up - down) / (2 * eps);
    const double g = grad.at(i);
    const double rel = std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-3});
    worst = std::max(worst, rel);
  }
  return worst;
}

inline double precision_oracle(const TokenSeq& y, const TokenSeq& src, TokenId eos) {
  std::size_t n = 0, hit = 0;
  for (TokenId t : y) {
    if (t == eos) continue;
    ++n;
    if (std::find(src.begin(), src.end(), t) != src.end()) ++hit;
  }
  return n == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(n);
}

// Re-derives one greedy-base lookahead step: the top-c pool, a greedy
// rollout of each extension, and f = logprob + w * h. Returns the winning
// token and fills `f` with the selection value of every pooled token.
inline TokenId lookahead_step_oracle(const faithdec::ConditionalModel& m, const faithdec::Document& x, const TokenSeq& prefix,
                              double prefix_lp, int c, double w, int max_length,
                              std::map<TokenId, double>& f) {
  const TokenId eos = m.eos_id();
  auto lp = m.next_token_logprobs(prefix, x);
  std::vector<TokenId> order(lp.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return lp[static_cast<std::size_t>(a)] > lp[static_cast<std::size_t>(b)];
  });
  std::vector<TokenId> pool;
  if (static_cast<int>(prefix.size()) + 1 >= max_length) {
    pool.push_back(eos);
  } else {
    pool.assign(order.begin(), order.begin() + c);
  }
  TokenId best = -1;
  double best_f = -1e300;
  for (TokenId t : pool) {
    TokenSeq y = prefix;
    y.push_back(t);
    while (y.back() != eos) {
      auto d = m.next_token_logprobs(y, x);
      if (static_cast<int>(y.size()) + 1 >= max_length) {
        y.push_back(eos);
        continue;
      }
      TokenId a = 0;
      for (TokenId v = 1; v < static_cast<TokenId>(d.size()); ++v) {
        if (d[static_cast<std::size_t>(v)] > d[static_cast<std::size_t>(a)]) a = v;
      }
      y.push_back(a);
    }
    const double value = prefix_lp + lp[static_cast<std::size_t>(t)] + w * precision_oracle(y, x.tokens, eos);
    f[t] = value;
    if (value > best_f) {
      best_f = value;
      best = t;
    }
  }
  return best;
}

}  // namespace oracle
