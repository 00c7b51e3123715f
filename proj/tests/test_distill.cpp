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
#include <numeric>

#include "faithdec/distill.hpp"
#include "faithdec/metrics.hpp"
#include "oracles.hpp"

using namespace faithdec;

namespace {

std::vector<PseudoLabeledExample> random_labels(Rng& rng, std::size_t V, std::size_t n) {
  std::vector<PseudoLabeledExample> out;
  auto target = [&] {
    TokenSeq t = oracle::random_tokens(rng, rng.index(4), 2, static_cast<int>(V));
    t.push_back(1);
    return t;
  };
  for (std::size_t i = 0; i < n; ++i) {
    PseudoLabeledExample e;
    e.source = oracle::random_doc(rng, V, 2 + rng.index(4));
    e.reference = target();
    e.generated = target();
    out.push_back(e);
  }
  return out;
}

std::vector<TrainingPair> refs_of(const std::vector<PseudoLabeledExample>& d) {
  std::vector<TrainingPair> out;
  for (const auto& e : d) out.push_back({e.source, e.reference});
  return out;
}

std::vector<TrainingPair> gens_of(const std::vector<PseudoLabeledExample>& d) {
  std::vector<TrainingPair> out;
  for (const auto& e : d) out.push_back({e.source, e.generated});
  return out;
}

Corpus small_corpus() {
  CorpusConfig cc;
  cc.vocab_size = 32;
  cc.num_docs = 300;
  return generate_corpus(cc);
}

DistillConfig quick_config() {
  DistillConfig cfg;
  cfg.train.epochs = 4;
  cfg.teacher.kind = RecipeKind::kBeamRanking;
  cfg.teacher.beam_width = 4;
  cfg.teacher.rank_scorer = "precision";
  return cfg;
}

}  // namespace

TEST_CASE("lambda zero is plain cross-entropy") {
  Rng rng(61);
  auto m = oracle::random_loglinear(6, 3, 0.5);
  auto data = random_labels(rng, 6, 8);
  auto refs = refs_of(data);
  auto d = distill_loss_and_grad(m, std::span<const PseudoLabeledExample>(data), 0.0, 1e-3);
  auto x = xe_loss_and_grad(m, std::span<const TrainingPair>(refs), 1e-3);
  CHECK(d.loss == x.loss);
  CHECK(d.grad == x.grad);
}

TEST_CASE("identical targets double the loss") {
  Rng rng(62);
  auto m = oracle::random_loglinear(6, 4, 0.5);
  auto data = random_labels(rng, 6, 8);
  for (auto& e : data) e.generated = e.reference;
  auto refs = refs_of(data);
  auto d = distill_loss_and_grad(m, std::span<const PseudoLabeledExample>(data), 1.0, 1e-3);
  auto x = xe_loss_and_grad(m, std::span<const TrainingPair>(refs), 1e-3);
  CHECK(d.loss == doctest::Approx(2 * x.loss).epsilon(1e-14));
  for (std::size_t i = 0; i < x.grad.num_params(); ++i) {
    CHECK(std::abs(d.grad.at(i) - 2 * x.grad.at(i)) < 1e-12);
  }
}

TEST_CASE("distillation gradient is the weighted sum of both terms") {
  Rng rng(63);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = oracle::random_loglinear(6, 10 + static_cast<std::uint64_t>(trial), 0.5);
    auto data = random_labels(rng, 6, 6);
    const double lambda = 3.0 * rng.uniform01();
    auto refs = refs_of(data), gens = gens_of(data);
    auto d = distill_loss_and_grad(m, std::span<const PseudoLabeledExample>(data), lambda, 1e-4);
    auto r = xe_loss_and_grad(m, std::span<const TrainingPair>(refs), 1e-4);
    auto g = xe_loss_and_grad(m, std::span<const TrainingPair>(gens), 1e-4);
    for (std::size_t i = 0; i < r.grad.num_params(); ++i) {
      CHECK(std::abs(d.grad.at(i) - (r.grad.at(i) + lambda * g.grad.at(i))) < 1e-12);
    }
    // Linear in lambda at fixed parameters.
    auto d2 = distill_loss_and_grad(m, std::span<const PseudoLabeledExample>(data), 2 * lambda, 1e-4);
    CHECK(std::abs((d2.loss - d.loss) - lambda * g.loss) < 1e-10);
  }
}

TEST_CASE("distillation gradient matches finite differences") {
  Rng rng(64);
  for (int point = 0; point < 50; ++point) {
    auto m = oracle::random_loglinear(5, 4000 + static_cast<std::uint64_t>(point), 0.7);
    auto data = random_labels(rng, 5, 4);
    const double lambda = 0.25 + rng.uniform01();
    auto r = distill_loss_and_grad(m, std::span<const PseudoLabeledExample>(data), lambda, 0.01);
    auto loss = [&](const LogLinearModel& mm) {
      return distill_loss_and_grad(mm, std::span<const PseudoLabeledExample>(data), lambda, 0.01).loss;
    };
    std::vector<std::size_t> idx(m.params().num_params());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    CHECK(oracle::max_rel_fd_error(m, loss, r.grad, idx) < 1e-4);
  }
}

TEST_CASE("pseudo labels") {
  Corpus corpus = small_corpus();
  TrainConfig tc;
  tc.epochs = 5;
  auto teacher = train(LogLinearModel(corpus.vocab.size(), 0, 1), training_pairs(corpus.train), tc);
  DecodeConfig dcfg;
  std::span<const Example> train_split(corpus.train);

  Recipe greedy;
  auto g = generate_pseudo_labels(teacher, greedy, train_split, dcfg);
  REQUIRE(g.size() == corpus.train.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g[i].generated == greedy_decode(teacher, corpus.train[i].source, dcfg).tokens);
    CHECK(g[i].reference == corpus.train[i].reference);
    CHECK(g[i].generated.back() == corpus.vocab.eos_id());
    CHECK(g[i].teacher_strategy == recipe_label(greedy));
  }

  Recipe ranked;
  ranked.kind = RecipeKind::kBeamRanking;
  ranked.rank_scorer = "precision";
  auto r = generate_pseudo_labels(teacher, ranked, train_split, dcfg);
  CHECK(r.size() == corpus.train.size());
  double mean_ranked = 0, mean_beam = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto& src = corpus.train[i].source;
    mean_ranked += source_precision(content(r[i].generated, 1), src.tokens);
    auto top = beam_decode(teacher, src, BeamConfig{ranked.beam_width}, dcfg).front();
    mean_beam += source_precision(content(top.tokens, 1), src.tokens);
  }
  CHECK(mean_ranked >= mean_beam);

  auto again = generate_pseudo_labels(teacher, ranked, train_split, dcfg);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(again[i].generated == r[i].generated);
}

TEST_CASE("lambda zero distillation is ordinary training") {
  Rng rng(65);
  auto data = random_labels(rng, 6, 30);
  DistillConfig cfg;
  cfg.lambda = 0.0;
  cfg.train.epochs = 6;
  cfg.train.batch_size = 4;
  auto init = oracle::random_loglinear(6, 21, 0.01);
  auto a = distill_train(init, data, cfg);
  auto b = train(init, refs_of(data), cfg.train);
  CHECK(a.params() == b.params());
}

TEST_CASE("one iteration is one distillation") {
  Corpus corpus = small_corpus();
  TrainConfig tc;
  tc.epochs = 5;
  auto teacher = train(LogLinearModel(corpus.vocab.size(), 0, 1), training_pairs(corpus.train), tc);
  DistillConfig cfg = quick_config();
  std::vector<Scorer> scorers{make_scorer("precision", 1)};
  auto rounds = iterative_distill(teacher, corpus, cfg, scorers);
  REQUIRE(rounds.size() == 1u);
  auto labels = generate_pseudo_labels(teacher, cfg.teacher, corpus.train, cfg.decode);
  auto direct = distill_train(fresh_student(teacher, cfg), labels, cfg);
  CHECK(rounds[0].student.params() == direct.params());
  CHECK(rounds[0].report.count("precision") == 1u);
  CHECK(rounds[0].teacher_calls_per_example > 0.0);
}

TEST_CASE("rounds share references and promote the student") {
  Corpus corpus = small_corpus();
  TrainConfig tc;
  tc.epochs = 5;
  auto teacher = train(LogLinearModel(corpus.vocab.size(), 0, 1), training_pairs(corpus.train), tc);
  DistillConfig cfg = quick_config();
  cfg.iterations = 3;
  auto rounds = iterative_distill(teacher, corpus, cfg, {make_scorer("precision", 1)});
  REQUIRE(rounds.size() == 3u);
  for (int r = 0; r < 3; ++r) {
    CHECK(rounds[static_cast<std::size_t>(r)].round == r);
    const auto& labels = rounds[static_cast<std::size_t>(r)].labels;
    REQUIRE(labels.size() == corpus.train.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      CHECK(labels[i].reference == corpus.train[i].reference);
      CHECK(labels[i].source.tokens == corpus.train[i].source.tokens);
    }
  }
  for (std::size_t r = 1; r < 3; ++r) {
    auto expect = generate_pseudo_labels(rounds[r - 1].student, cfg.teacher, corpus.train, cfg.decode);
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(rounds[r].labels[i].generated == expect[i].generated);
    }
  }
}

TEST_CASE("distill config validation") {
  DistillConfig cfg;
  cfg.lambda = -1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = DistillConfig{};
  cfg.iterations = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = DistillConfig{};
  cfg.label_fraction = 0.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}
