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

#include "faithdec/distill.hpp"

#include <cmath>

namespace faithdec {

void validate(const DistillConfig& cfg) {
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) {
    throw ConfigError("lambda must be a finite value >= 0");
  }
  if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(cfg.label_fraction > 0.0 && cfg.label_fraction <= 1.0)) {
    throw ConfigError("label_fraction must be in (0, 1]");
  }
  validate(cfg.train);
  validate(cfg.decode);
}

std::vector<PseudoLabeledExample> generate_pseudo_labels(
    const ConditionalModel& teacher, const Recipe& strategy,
    std::span<const Example> corpus, const DecodeConfig& dcfg) {
  validate(strategy, teacher.vocab_size());
  const std::string name = recipe_label(strategy);
  std::vector<PseudoLabeledExample> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    DecodeConfig d = dcfg;
    d.seed = document_seed(dcfg.seed, i);
    PseudoLabeledExample ex;
    ex.source = corpus[i].source;
    ex.reference = corpus[i].reference;
    ex.generated = run_recipe(teacher, ex.source, strategy, d).output.tokens;
    ex.teacher_strategy = name;
    ex.seed = d.seed;
    out.push_back(std::move(ex));
  }
  return out;
}

LossAndGrad distill_loss_and_grad(const LogLinearModel& student,
                                  std::span<const PseudoLabeledExample* const> batch,
                                  double lambda, double l2) {
  if (!(lambda >= 0.0)) throw UsageError("lambda must be >= 0");
  std::vector<TrainingPair> refs;
  refs.reserve(batch.size());
  for (const auto* ex : batch) refs.push_back({ex->source, ex->reference});
  LossAndGrad out = xe_loss_and_grad(student, refs, l2);
  if (lambda == 0.0) return out;

  std::vector<TrainingPair> gen;
  gen.reserve(batch.size());
  for (const auto* ex : batch) gen.push_back({ex->source, ex->generated});
  LossAndGrad g = xe_loss_and_grad(student, gen, l2);
  out.loss += lambda * g.loss;
  out.grad.axpy(lambda, g.grad);
  return out;
}

LossAndGrad distill_loss_and_grad(const LogLinearModel& student,
                                  std::span<const PseudoLabeledExample> batch,
                                  double lambda, double l2) {
  std::vector<const PseudoLabeledExample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return distill_loss_and_grad(student, ptrs, lambda, l2);
}

LogLinearModel distill_train(LogLinearModel student,
                             std::span<const PseudoLabeledExample> data,
                             const DistillConfig& cfg,
                             std::vector<double>* epoch_losses) {
  validate(cfg);
  if (data.empty()) throw UsageError("distillation data is empty");
  std::vector<const PseudoLabeledExample*> batch;
  auto objective = [&](const LogLinearModel& m, std::span<const std::size_t> idx) {
    batch.clear();
    for (std::size_t i : idx) batch.push_back(&data[i]);
    return distill_loss_and_grad(m, batch, cfg.lambda, cfg.train.l2);
  };
  return gradient_descent(std::move(student), data.size(), cfg.train, objective,
                          epoch_losses);
}

LogLinearModel fresh_student(const ConditionalModel& like, const DistillConfig& cfg) {
  return LogLinearModel::random_init(like.vocab_size(), like.bos_id(), like.eos_id(),
                                     cfg.student_seed, cfg.init_scale);
}

std::vector<DistillRound> iterative_distill(const ConditionalModel& initial_teacher,
                                            const Corpus& corpus,
                                            const DistillConfig& cfg,
                                            const std::vector<Scorer>& scorers,
                                            const std::string& eval_split) {
  validate(cfg);
  const auto n_label = static_cast<std::size_t>(
      std::ceil(cfg.label_fraction * static_cast<double>(corpus.train.size())));
  std::span<const Example> train(corpus.train.data(), std::min(n_label, corpus.train.size()));
  const auto& eval = corpus.split(eval_split);
  const auto eval_docs = documents(eval);
  std::vector<TokenSeq> eval_refs;
  for (const auto& ex : eval) eval_refs.push_back(ex.reference);

  Recipe greedy;
  greedy.kind = RecipeKind::kGreedy;

  std::vector<DistillRound> rounds;
  for (int r = 0; r < cfg.iterations; ++r) {
    const ConditionalModel& teacher =
        r == 0 ? initial_teacher : static_cast<const ConditionalModel&>(rounds.back().student);
    const std::uint64_t before = teacher.calls();
    auto labels = generate_pseudo_labels(teacher, cfg.teacher, train, cfg.decode);
    const double teacher_calls =
        static_cast<double>(teacher.calls() - before) / static_cast<double>(labels.size());

    LogLinearModel student = distill_train(fresh_student(initial_teacher, cfg), labels, cfg);
    RecipeStats stats = evaluate_recipe(student, eval_docs, eval_refs, greedy, scorers,
                                        cfg.decode);
    DistillRound round{r, std::move(student), std::move(labels), {}, teacher_calls,
                       stats.model_calls_per_summary};
    round.report = stats.metric_means;
    round.report["rouge_l"] = stats.rouge_l;
    round.report["mean_length"] = stats.mean_length;
    rounds.push_back(std::move(round));
  }
  return rounds;
}

}  // namespace faithdec
