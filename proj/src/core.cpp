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

#include "faithdec/core.hpp"

#include <sstream>

namespace faithdec {

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenId bos_id,
                       TokenId eos_id)
    : tokens_(std::move(tokens)), bos_(bos_id), eos_(eos_id) {
  if (tokens_.size() < 3) {
    throw ConfigError("vocabulary needs at least 3 tokens, got " +
                      std::to_string(tokens_.size()));
  }
  if (!valid(bos_) || !valid(eos_) || bos_ == eos_) {
    throw ConfigError("vocabulary bos/eos ids must be distinct and in range");
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty() ||
        tokens_[i].find_first_of(" \t\r\n") != std::string::npos) {
      throw ConfigError("vocabulary token " + std::to_string(i) +
                        " is empty or contains whitespace");
    }
    auto [it, inserted] =
        index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) throw ConfigError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) {
    throw ConfigError("unknown token '" + std::string(token) + "'");
  }
  return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!valid(id)) {
    throw ConfigError("token id " + std::to_string(id) +
                      " out of range for vocabulary of size " +
                      std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void validate(const Document& doc, const Vocabulary& vocab) {
  if (doc.tokens.empty()) throw ConfigError("document '" + doc.id + "' is empty");
  for (TokenId t : doc.tokens) {
    if (!vocab.valid(t)) {
      throw ConfigError("document '" + doc.id + "' holds invalid token id " +
                        std::to_string(t));
    }
  }
}

Hypothesis extend(const Hypothesis& h, TokenId token, double token_logprob,
                  TokenId eos_id) {
  if (h.finished) throw UsageError("cannot extend a finished hypothesis");
  if (token_logprob > 0.0) {
    throw UsageError("token log-probability must be <= 0");
  }
  Hypothesis out;
  out.tokens.reserve(h.tokens.size() + 1);
  out.tokens = h.tokens;
  out.tokens.push_back(token);
  out.logprob = h.logprob + token_logprob;
  out.finished = token == eos_id;
  return out;
}

std::span<const TokenId> content(std::span<const TokenId> seq, TokenId eos_id) {
  if (!seq.empty() && seq.back() == eos_id) return seq.first(seq.size() - 1);
  return seq;
}

std::string detokenize(const Vocabulary& vocab, std::span<const TokenId> tokens) {
  std::string out;
  for (TokenId t : tokens) {
    const std::string& s = vocab.token(t);
    if (t == vocab.eos_id()) continue;
    if (!out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

TokenSeq tokenize(const Vocabulary& vocab, std::string_view text) {
  TokenSeq out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) out.push_back(vocab.id(word));
  return out;
}

}  // namespace faithdec
