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

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "faithdec/core.hpp"

namespace faithdec {

// Contract for p(y_t | y_{1:t-1}, x). Implementations supply raw logits; the
// base class normalizes them and counts every evaluation so decoding cost can
// be reported in model calls rather than wall-clock.
class ConditionalModel {
 public:
  ConditionalModel(std::size_t vocab_size, TokenId bos_id, TokenId eos_id);
  ConditionalModel(const ConditionalModel& other);
  ConditionalModel& operator=(const ConditionalModel& other);
  virtual ~ConditionalModel() = default;

  std::size_t vocab_size() const { return vocab_size_; }
  TokenId bos_id() const { return bos_; }
  TokenId eos_id() const { return eos_; }

  // Normalized natural-log distribution over the vocabulary. Throws
  // UsageError if the prefix contains EOS or an invalid id.
  std::vector<double> next_token_logprobs(std::span<const TokenId> prefix,
                                          const Document& source) const;
  void next_token_logprobs(std::span<const TokenId> prefix,
                           const Document& source, std::span<double> out) const;

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() const { calls_.store(0, std::memory_order_relaxed); }

 protected:
  virtual void logits(std::span<const TokenId> prefix, const Document& source,
                      std::span<double> out) const = 0;

 private:
  std::size_t vocab_size_;
  TokenId bos_;
  TokenId eos_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

// In-place log-softmax; returns the log normalizer of the input.
double log_softmax(std::span<double> values);
double logsumexp(std::span<const double> values);

// Sum over t of log p(y_t | y_{1:t-1}, x).
double sequence_logprob(const ConditionalModel& model,
                        std::span<const TokenId> y, const Document& x);

// Marks which vocabulary entries occur in the source.
std::vector<char> source_mask(const Document& source, std::size_t vocab_size);

// Trainable parameters of the log-linear model, also used for gradients.
struct LogLinearParams {
  std::size_t vocab_size = 0;
  std::vector<double> bias;        // [V]
  std::vector<double> transition;  // [V x V], row = previous token (BOS row for t=0)
  std::vector<double> copy_gate;   // [V]

  static LogLinearParams zeros(std::size_t vocab_size);

  double& trans(TokenId prev, TokenId next) {
    return transition[static_cast<std::size_t>(prev) * vocab_size +
                      static_cast<std::size_t>(next)];
  }
  double trans(TokenId prev, TokenId next) const {
    return transition[static_cast<std::size_t>(prev) * vocab_size +
                      static_cast<std::size_t>(next)];
  }

  std::size_t num_params() const { return bias.size() + transition.size() + copy_gate.size(); }
  // Flat access in the order bias, transition, copy_gate.
  double& at(std::size_t i);
  double at(std::size_t i) const;

  void axpy(double alpha, const LogLinearParams& x);  // this += alpha * x
  void scale(double alpha);
  double squared_norm() const;
  bool all_finite() const;

  bool operator==(const LogLinearParams&) const = default;
};

// logits(v) = bias[v] + transition[prev, v] + copy_gate[v] * [v in source].
class LogLinearModel final : public ConditionalModel {
 public:
  LogLinearModel(std::size_t vocab_size, TokenId bos_id, TokenId eos_id);
  LogLinearModel(LogLinearParams params, TokenId bos_id, TokenId eos_id);

  // Small seeded Gaussian initialization (stddev `scale`).
  static LogLinearModel random_init(std::size_t vocab_size, TokenId bos_id,
                                    TokenId eos_id, std::uint64_t seed,
                                    double scale = 0.01);

  const LogLinearParams& params() const { return params_; }
  LogLinearParams& mutable_params() { return params_; }

 protected:
  void logits(std::span<const TokenId> prefix, const Document& source,
              std::span<double> out) const override;

 private:
  LogLinearParams params_;
};

// Fixed synthetic generator: logits are seeded pseudo-random functions of the
// whole prefix, plus a constant bonus for source tokens. It is not
// first-order, which makes it a useful adversary for the search routines.
class HashedContextModel final : public ConditionalModel {
 public:
  HashedContextModel(std::size_t vocab_size, TokenId bos_id, TokenId eos_id,
                     std::uint64_t seed, double logit_scale = 2.0,
                     double copy_bonus = 0.0);

 protected:
  void logits(std::span<const TokenId> prefix, const Document& source,
              std::span<double> out) const override;

 private:
  std::uint64_t seed_;
  double scale_;
  double copy_bonus_;
};

struct TrainingPair {
  Document source;
  TokenSeq target;  // EOS-terminated
};

enum class LrSchedule { kConstant, kLinear };  // kLinear decays to 0 at the last step

struct TrainConfig {
  double learning_rate = 0.5;
  LrSchedule schedule = LrSchedule::kLinear;
  int epochs = 60;
  int batch_size = 32;
  std::uint64_t seed = 7;
  double l2 = 1e-4;
};

void validate(const TrainConfig& cfg);

struct LossAndGrad {
  double loss = 0.0;
  LogLinearParams grad;
};

// Mean over the batch of per-sequence summed NLL, plus l2 * ||params||^2,
// and its exact gradient. Throws UsageError on an empty batch or a target
// that does not end in EOS.
LossAndGrad xe_loss_and_grad(const LogLinearModel& model,
                             std::span<const TrainingPair* const> batch,
                             double l2);
LossAndGrad xe_loss_and_grad(const LogLinearModel& model,
                             std::span<const TrainingPair> batch, double l2);

// Mini-batch gradient descent over `num_examples` items. `batch_loss` gets the
// indices of one batch and returns the loss and gradient at the current
// parameters. Both train() and distillation run through this loop.
using BatchObjective = std::function<LossAndGrad(
    const LogLinearModel&, std::span<const std::size_t>)>;

LogLinearModel gradient_descent(LogLinearModel model, std::size_t num_examples,
                                const TrainConfig& cfg,
                                const BatchObjective& batch_loss,
                                std::vector<double>* epoch_losses = nullptr);

// Throws RuntimeAbort naming the epoch if the loss becomes non-finite.
LogLinearModel train(LogLinearModel model, std::span<const TrainingPair> corpus,
                     const TrainConfig& cfg,
                     std::vector<double>* epoch_losses = nullptr);

// Mean loss over the full corpus at the current parameters.
double corpus_loss(const LogLinearModel& model,
                   std::span<const TrainingPair> corpus, double l2);

}  // namespace faithdec
