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

// Decoding distillation: a teacher decodes the training sources with an
// expensive faithfulness-aware recipe, and a fresh student of the same
// architecture is trained on
//
//   L = XE(references) + lambda * XE(teacher outputs)
//
// so that plain greedy decoding of the student inherits the teacher's
// behaviour. iterative_distill promotes each student to the next teacher.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "faithdec/corpus.hpp"
#include "faithdec/model.hpp"
#include "faithdec/recipes.hpp"

namespace faithdec {

struct PseudoLabeledExample {
  Document source;
  TokenSeq reference;  // EOS-terminated
  TokenSeq generated;  // EOS-terminated teacher output
  std::string teacher_strategy;
  std::uint64_t seed = 0;
};

struct DistillConfig {
  double lambda = 1.0;
  Recipe teacher;
  int iterations = 1;
  TrainConfig train;
  DecodeConfig decode;
  double label_fraction = 1.0;      // share of the training split given to the teacher
  std::uint64_t student_seed = 11;  // fresh student initialization
  double init_scale = 0.01;
};

void validate(const DistillConfig& cfg);

// One teacher output per example; example i decodes with
// document_seed(dcfg.seed, i).
std::vector<PseudoLabeledExample> generate_pseudo_labels(
    const ConditionalModel& teacher, const Recipe& strategy,
    std::span<const Example> corpus, const DecodeConfig& dcfg);

LossAndGrad distill_loss_and_grad(const LogLinearModel& student,
                                  std::span<const PseudoLabeledExample* const> batch,
                                  double lambda, double l2);
LossAndGrad distill_loss_and_grad(const LogLinearModel& student,
                                  std::span<const PseudoLabeledExample> batch,
                                  double lambda, double l2);

// Mini-batch gradient descent on the distillation loss, using the same loop
// (and therefore the same shuffles) as train().
LogLinearModel distill_train(LogLinearModel student,
                             std::span<const PseudoLabeledExample> data,
                             const DistillConfig& cfg,
                             std::vector<double>* epoch_losses = nullptr);

LogLinearModel fresh_student(const ConditionalModel& like, const DistillConfig& cfg);

struct DistillRound {
  int round = 0;
  LogLinearModel student;
  std::vector<PseudoLabeledExample> labels;
  std::map<std::string, double> report;  // student greedy metrics on held-out docs
  double teacher_calls_per_example = 0.0;
  double student_calls_per_example = 0.0;
};

// Round 0 distills from `initial_teacher`; round i > 0 from the round i-1
// student. Every round reuses corpus.train references and regenerates only
// the teacher outputs; reports evaluate greedy decoding on `eval_split`.
std::vector<DistillRound> iterative_distill(const ConditionalModel& initial_teacher,
                                            const Corpus& corpus,
                                            const DistillConfig& cfg,
                                            const std::vector<Scorer>& scorers,
                                            const std::string& eval_split = "test");

}  // namespace faithdec
