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

// Shared domain types: vocabulary, documents, hypotheses and scored
// candidates. Everything here is a plain value; nothing is mutated after
// construction except through the free functions below, which return copies.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace faithdec {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kNoToken = -1;

// Caller violated a precondition (e.g. extending a finished hypothesis).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input data or configuration (files, JSON, CSV, flags).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation that had to stop (non-finite loss, singular system, ...).
class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws ConfigError on duplicates, |V| < 3, or bos == eos.
  Vocabulary(std::vector<std::string> tokens, TokenId bos_id, TokenId eos_id);

  std::size_t size() const { return tokens_.size(); }
  TokenId bos_id() const { return bos_; }
  TokenId eos_id() const { return eos_; }

  bool contains(std::string_view token) const;
  TokenId id(std::string_view token) const;  // throws ConfigError if unknown
  const std::string& token(TokenId id) const;  // throws ConfigError if out of range
  bool valid(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
  }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && bos_ == other.bos_ && eos_ == other.eos_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId bos_ = 0;
  TokenId eos_ = 1;
};

struct Document {
  std::string id;
  TokenSeq tokens;
};

// Throws ConfigError if the document is empty or holds an id outside `vocab`.
void validate(const Document& doc, const Vocabulary& vocab);

struct Hypothesis {
  TokenSeq tokens;  // generated tokens, BOS excluded, EOS last when finished
  double logprob = 0.0;
  bool finished = false;

  bool operator==(const Hypothesis&) const = default;
};

// Returns h extended by `token`. Throws UsageError if h is finished or
// token_logprob > 0.
Hypothesis extend(const Hypothesis& h, TokenId token, double token_logprob,
                  TokenId eos_id);

struct ScoredCandidate {
  Hypothesis hypothesis;
  std::map<std::string, double> metric_scores;
  double rank_score = 0.0;
  int source_rank = 0;
};

// Tokens of `seq` with a trailing EOS removed (and nothing else).
std::span<const TokenId> content(std::span<const TokenId> seq, TokenId eos_id);

// Space-joined token strings with EOS omitted.
std::string detokenize(const Vocabulary& vocab, std::span<const TokenId> tokens);
// Whitespace split; unknown tokens raise ConfigError naming the token.
TokenSeq tokenize(const Vocabulary& vocab, std::string_view text);

}  // namespace faithdec
