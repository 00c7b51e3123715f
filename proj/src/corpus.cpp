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

#include "faithdec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "faithdec/random.hpp"

namespace faithdec {

void validate(const CorpusConfig& cfg) {
  if (cfg.vocab_size < 8) throw ConfigError("vocab_size must be >= 8");
  if (cfg.num_docs < 1) throw ConfigError("num_docs must be >= 1");
  if (cfg.summary_len.min < 1 || cfg.summary_len.max < cfg.summary_len.min) {
    throw ConfigError("summary_len must be a range with min >= 1");
  }
  if (cfg.summary_len.max > 26) throw ConfigError("summary_len.max must be <= 26");
  if (cfg.source_len.min < 1 || cfg.source_len.max < cfg.source_len.min) {
    throw ConfigError("source_len must be a range with min >= 1");
  }
  if (!(cfg.hallucination_rate >= 0.0 && cfg.hallucination_rate <= 1.0)) {
    throw ConfigError("hallucination_rate must be in [0, 1]");
  }
  if (!(cfg.train_fraction >= 0.0 && cfg.dev_fraction >= 0.0 &&
        cfg.train_fraction + cfg.dev_fraction <= 1.0)) {
    throw ConfigError("split fractions must be non-negative and sum to <= 1");
  }
  if (!(cfg.successor_affinity >= 1.0) || !std::isfinite(cfg.successor_affinity)) {
    throw ConfigError("successor_affinity must be a finite value >= 1");
  }
  if (cfg.vocab_size - 2 < cfg.summary_len.max) {
    throw ConfigError("vocab too small: need at least one token per summary slot");
  }
}

const std::vector<Example>& Corpus::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + name + "'");
}

namespace {

constexpr TokenId kBos = 0;
constexpr TokenId kEos = 1;

struct Template {
  std::vector<std::vector<TokenId>> groups;  // slot -> token ids, popularity order
  std::vector<int> slot_of;                  // token -> slot (-1 for specials)
  std::vector<double> popularity;            // token -> Zipf weight within its slot
  std::vector<TokenId> favourite;            // token -> favoured successor (or -1)
  double affinity = 1.0;                     // weight multiplier of the favourite
};

Template build_template(int vocab_size, int slots, double affinity, Rng& rng) {
  Template t;
  t.affinity = affinity;
  t.groups.resize(static_cast<std::size_t>(slots));
  t.slot_of.assign(static_cast<std::size_t>(vocab_size), -1);
  t.popularity.assign(static_cast<std::size_t>(vocab_size), 0.0);
  t.favourite.assign(static_cast<std::size_t>(vocab_size), -1);
  for (TokenId id = 2; id < vocab_size; ++id) {
    const int slot = (id - 2) % slots;
    auto& g = t.groups[static_cast<std::size_t>(slot)];
    t.slot_of[static_cast<std::size_t>(id)] = slot;
    t.popularity[static_cast<std::size_t>(id)] = 1.0 / static_cast<double>(g.size() + 1);
    g.push_back(id);
  }
  for (int s = 0; s + 1 < slots; ++s) {
    const auto& next = t.groups[static_cast<std::size_t>(s + 1)];
    for (TokenId id : t.groups[static_cast<std::size_t>(s)]) {
      t.favourite[static_cast<std::size_t>(id)] = next[rng.index(next.size())];
    }
  }
  return t;
}

double transition_weight(const Template& t, TokenId prev, TokenId next) {
  double w = t.popularity[static_cast<std::size_t>(next)];
  if (prev >= 0 && t.favourite[static_cast<std::size_t>(prev)] == next) w *= t.affinity;
  return w;
}

TokenId draw(const std::vector<TokenId>& options, const std::vector<double>& weights,
             Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform01() * total;
  for (std::size_t i = 0; i < options.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return options[i];
  }
  return options.back();
}

// Token for `slot` following `prev` (-1 at sentence start).
TokenId draw_slot(const Template& t, int slot, TokenId prev, Rng& rng,
                  const std::unordered_set<TokenId>* exclude = nullptr) {
  std::vector<TokenId> options;
  std::vector<double> weights;
  for (TokenId id : t.groups[static_cast<std::size_t>(slot)]) {
    if (exclude && exclude->count(id)) continue;
    options.push_back(id);
    weights.push_back(transition_weight(t, prev, id));
  }
  if (options.empty()) return -1;
  return draw(options, weights, rng);
}

int draw_length(IntRange r, Rng& rng) {
  return r.min + static_cast<int>(rng.index(static_cast<std::size_t>(r.max - r.min + 1)));
}

}  // namespace

Corpus generate_corpus(const CorpusConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const int slots = cfg.summary_len.max;

  std::vector<std::string> names(static_cast<std::size_t>(cfg.vocab_size));
  names[kBos] = "<bos>";
  names[kEos] = "<eos>";
  std::vector<int> per_slot(static_cast<std::size_t>(slots), 0);
  for (TokenId id = 2; id < cfg.vocab_size; ++id) {
    const int slot = (id - 2) % slots;
    names[static_cast<std::size_t>(id)] =
        std::string(1, static_cast<char>('a' + slot)) + std::to_string(per_slot[static_cast<std::size_t>(slot)]++);
  }

  Corpus corpus;
  corpus.vocab = Vocabulary(names, kBos, kEos);
  const Template tmpl = build_template(cfg.vocab_size, slots, cfg.successor_affinity, rng);

  std::vector<Example> all;
  all.reserve(static_cast<std::size_t>(cfg.num_docs));
  for (int d = 0; d < cfg.num_docs; ++d) {
    Example ex;
    char id[32];
    std::snprintf(id, sizeof(id), "doc-%05d", d);
    ex.source.id = id;

    std::vector<TokenSeq> sentences;
    const int target = draw_length(cfg.source_len, rng);
    while (static_cast<int>(ex.source.tokens.size()) < target) {
      const int len = draw_length(cfg.summary_len, rng);
      TokenSeq sent;
      TokenId prev = -1;
      for (int s = 0; s < len; ++s) {
        prev = draw_slot(tmpl, s, prev, rng);
        sent.push_back(prev);
      }
      ex.source.tokens.insert(ex.source.tokens.end(), sent.begin(), sent.end());
      sentences.push_back(std::move(sent));
    }

    const std::unordered_set<TokenId> support(ex.source.tokens.begin(),
                                              ex.source.tokens.end());
    ex.reference = sentences[rng.index(sentences.size())];
    TokenId prev = -1;
    for (std::size_t i = 0; i < ex.reference.size(); ++i) {
      if (rng.uniform01() < cfg.hallucination_rate) {
        TokenId swap = draw_slot(tmpl, static_cast<int>(i), prev, rng, &support);
        if (swap < 0) {
          std::vector<TokenId> anywhere;
          for (TokenId id = 2; id < cfg.vocab_size; ++id) {
            if (!support.count(id)) anywhere.push_back(id);
          }
          if (anywhere.empty()) {
            throw ConfigError("vocab too small: source '" + ex.source.id +
                              "' covers every content token");
          }
          swap = anywhere[rng.index(anywhere.size())];
        }
        ex.reference[i] = swap;
      }
      prev = ex.reference[i];
    }
    ex.reference.push_back(kEos);
    all.push_back(std::move(ex));
  }

  const auto n = static_cast<std::size_t>(cfg.num_docs);
  const auto n_train = static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(n)));
  const auto n_dev = std::min(n - n_train, static_cast<std::size_t>(std::floor(cfg.dev_fraction * static_cast<double>(n))));
  corpus.train.assign(std::make_move_iterator(all.begin()),
                      std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train)));
  corpus.dev.assign(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train)),
                    std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev)));
  corpus.test.assign(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev)),
                     std::make_move_iterator(all.end()));
  return corpus;
}

std::vector<TrainingPair> training_pairs(std::span<const Example> examples) {
  std::vector<TrainingPair> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back({ex.source, ex.reference});
  return out;
}

std::vector<Document> documents(std::span<const Example> examples) {
  std::vector<Document> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(ex.source);
  return out;
}

}  // namespace faithdec
