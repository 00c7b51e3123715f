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

#include "faithdec/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "faithdec/random.hpp"

namespace faithdec {

ConditionalModel::ConditionalModel(std::size_t vocab_size, TokenId bos_id,
                                   TokenId eos_id)
    : vocab_size_(vocab_size), bos_(bos_id), eos_(eos_id) {
  if (vocab_size < 3) throw UsageError("model vocabulary must have >= 3 entries");
  if (bos_id == eos_id || bos_id < 0 || eos_id < 0 ||
      static_cast<std::size_t>(std::max(bos_id, eos_id)) >= vocab_size) {
    throw UsageError("model bos/eos ids must be distinct and in range");
  }
}

ConditionalModel::ConditionalModel(const ConditionalModel& other)
    : vocab_size_(other.vocab_size_), bos_(other.bos_), eos_(other.eos_) {}

ConditionalModel& ConditionalModel::operator=(const ConditionalModel& other) {
  vocab_size_ = other.vocab_size_;
  bos_ = other.bos_;
  eos_ = other.eos_;
  reset_calls();
  return *this;
}

std::vector<double> ConditionalModel::next_token_logprobs(
    std::span<const TokenId> prefix, const Document& source) const {
  std::vector<double> out(vocab_size_);
  next_token_logprobs(prefix, source, out);
  return out;
}

void ConditionalModel::next_token_logprobs(std::span<const TokenId> prefix,
                                           const Document& source,
                                           std::span<double> out) const {
  if (out.size() != vocab_size_) throw UsageError("output span has wrong size");
  for (TokenId t : prefix) {
    if (t == eos_) throw UsageError("prefix must not contain EOS");
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size_) {
      throw UsageError("prefix holds invalid token id " + std::to_string(t));
    }
  }
  calls_.fetch_add(1, std::memory_order_relaxed);
  logits(prefix, source, out);
  log_softmax(out);
}

double logsumexp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

double log_softmax(std::span<double> values) {
  double lse = logsumexp(values);
  // Rounding can leave a near-certain entry a hair above zero.
  for (double& v : values) v = std::min(v - lse, 0.0);
  return lse;
}

double sequence_logprob(const ConditionalModel& model,
                        std::span<const TokenId> y, const Document& x) {
  std::vector<double> lp(model.vocab_size());
  double total = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    model.next_token_logprobs(y.first(t), x, lp);
    TokenId tok = y[t];
    if (tok < 0 || static_cast<std::size_t>(tok) >= model.vocab_size()) {
      throw UsageError("sequence holds invalid token id " + std::to_string(tok));
    }
    total += lp[static_cast<std::size_t>(tok)];
  }
  return total;
}

std::vector<char> source_mask(const Document& source, std::size_t vocab_size) {
  std::vector<char> mask(vocab_size, 0);
  for (TokenId t : source.tokens) {
    if (t >= 0 && static_cast<std::size_t>(t) < vocab_size) {
      mask[static_cast<std::size_t>(t)] = 1;
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// LogLinearParams

LogLinearParams LogLinearParams::zeros(std::size_t vocab_size) {
  LogLinearParams p;
  p.vocab_size = vocab_size;
  p.bias.assign(vocab_size, 0.0);
  p.transition.assign(vocab_size * vocab_size, 0.0);
  p.copy_gate.assign(vocab_size, 0.0);
  return p;
}

double& LogLinearParams::at(std::size_t i) {
  if (i < bias.size()) return bias[i];
  i -= bias.size();
  if (i < transition.size()) return transition[i];
  i -= transition.size();
  return copy_gate.at(i);
}

double LogLinearParams::at(std::size_t i) const {
  return const_cast<LogLinearParams*>(this)->at(i);
}

void LogLinearParams::axpy(double alpha, const LogLinearParams& x) {
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += alpha * x.bias[i];
  for (std::size_t i = 0; i < transition.size(); ++i) {
    transition[i] += alpha * x.transition[i];
  }
  for (std::size_t i = 0; i < copy_gate.size(); ++i) {
    copy_gate[i] += alpha * x.copy_gate[i];
  }
}

void LogLinearParams::scale(double alpha) {
  for (double& v : bias) v *= alpha;
  for (double& v : transition) v *= alpha;
  for (double& v : copy_gate) v *= alpha;
}

double LogLinearParams::squared_norm() const {
  double s = 0.0;
  for (double v : bias) s += v * v;
  for (double v : transition) s += v * v;
  for (double v : copy_gate) s += v * v;
  return s;
}

bool LogLinearParams::all_finite() const {
  auto finite = [](const std::vector<double>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
  };
  return finite(bias) && finite(transition) && finite(copy_gate);
}

// ---------------------------------------------------------------------------
// LogLinearModel

LogLinearModel::LogLinearModel(std::size_t vocab_size, TokenId bos_id,
                               TokenId eos_id)
    : ConditionalModel(vocab_size, bos_id, eos_id),
      params_(LogLinearParams::zeros(vocab_size)) {}

LogLinearModel::LogLinearModel(LogLinearParams params, TokenId bos_id,
                               TokenId eos_id)
    : ConditionalModel(params.vocab_size, bos_id, eos_id),
      params_(std::move(params)) {
  const std::size_t v = params_.vocab_size;
  if (params_.bias.size() != v || params_.copy_gate.size() != v ||
      params_.transition.size() != v * v) {
    throw ConfigError("log-linear parameter shapes do not match vocab_size " +
                      std::to_string(v));
  }
  if (!params_.all_finite()) throw ConfigError("log-linear parameters must be finite");
}

LogLinearModel LogLinearModel::random_init(std::size_t vocab_size,
                                           TokenId bos_id, TokenId eos_id,
                                           std::uint64_t seed, double scale) {
  LogLinearModel m(vocab_size, bos_id, eos_id);
  Rng rng(seed);
  for (std::size_t i = 0; i < m.params_.num_params(); ++i) {
    m.params_.at(i) = rng.normal(0.0, scale);
  }
  return m;
}

void LogLinearModel::logits(std::span<const TokenId> prefix,
                            const Document& source,
                            std::span<double> out) const {
  const std::size_t v = params_.vocab_size;
  const TokenId prev = prefix.empty() ? bos_id() : prefix.back();
  const double* row = params_.transition.data() + static_cast<std::size_t>(prev) * v;
  for (std::size_t i = 0; i < v; ++i) out[i] = params_.bias[i] + row[i];
  for (TokenId t : source.tokens) {
    if (t >= 0 && static_cast<std::size_t>(t) < v) {
      // Source tokens may repeat; the gate is an indicator, not a count.
      out[static_cast<std::size_t>(t)] = params_.bias[static_cast<std::size_t>(t)] +
                                         row[t] + params_.copy_gate[static_cast<std::size_t>(t)];
    }
  }
}

// ---------------------------------------------------------------------------
// HashedContextModel

namespace {

std::uint64_t hash_prefix(std::uint64_t seed, std::span<const TokenId> prefix) {
  std::uint64_t h = derive_seed(seed, 0x51ED270B);
  for (TokenId t : prefix) h = derive_seed(h, static_cast<std::uint64_t>(t) + 1);
  return h;
}

double hashed_normal(std::uint64_t h, std::uint64_t v) {
  std::uint64_t a = derive_seed(h, 2 * v);
  std::uint64_t b = derive_seed(h, 2 * v + 1);
  double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
  double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace

HashedContextModel::HashedContextModel(std::size_t vocab_size, TokenId bos_id,
                                       TokenId eos_id, std::uint64_t seed,
                                       double logit_scale, double copy_bonus)
    : ConditionalModel(vocab_size, bos_id, eos_id),
      seed_(seed),
      scale_(logit_scale),
      copy_bonus_(copy_bonus) {}

void HashedContextModel::logits(std::span<const TokenId> prefix,
                                const Document& source,
                                std::span<double> out) const {
  const std::uint64_t h = hash_prefix(seed_, prefix);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale_ * hashed_normal(h, i);
  if (copy_bonus_ != 0.0) {
    auto mask = source_mask(source, out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (mask[i]) out[i] += copy_bonus_;
    }
  }
}

// ---------------------------------------------------------------------------
// Training

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (cfg.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(cfg.l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
}

LossAndGrad xe_loss_and_grad(const LogLinearModel& model,
                             std::span<const TrainingPair* const> batch,
                             double l2) {
  if (batch.empty()) throw UsageError("xe_loss_and_grad needs a non-empty batch");
  const LogLinearParams& p = model.params();
  const std::size_t v = p.vocab_size;
  LossAndGrad out{0.0, LogLinearParams::zeros(v)};
  std::vector<double> lp(v);
  std::vector<char> mask;

  for (const TrainingPair* ex : batch) {
    const TokenSeq& y = ex->target;
    if (y.empty() || y.back() != model.eos_id()) {
      throw UsageError("training targets must end in EOS");
    }
    mask = source_mask(ex->source, v);
    for (std::size_t t = 0; t < y.size(); ++t) {
      model.next_token_logprobs(std::span(y).first(t), ex->source, lp);
      const auto gold = static_cast<std::size_t>(y[t]);
      out.loss -= lp[gold];
      const TokenId prev = t == 0 ? model.bos_id() : y[t - 1];
      double* grow = out.grad.transition.data() + static_cast<std::size_t>(prev) * v;
      for (std::size_t i = 0; i < v; ++i) {
        double d = std::exp(lp[i]) - (i == gold ? 1.0 : 0.0);
        out.grad.bias[i] += d;
        grow[i] += d;
        if (mask[i]) out.grad.copy_gate[i] += d;
      }
    }
  }

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv_n;
  out.grad.scale(inv_n);
  if (l2 > 0.0) {
    out.loss += l2 * p.squared_norm();
    out.grad.axpy(2.0 * l2, p);
  }
  return out;
}

LossAndGrad xe_loss_and_grad(const LogLinearModel& model,
                             std::span<const TrainingPair> batch, double l2) {
  std::vector<const TrainingPair*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return xe_loss_and_grad(model, ptrs, l2);
}

LogLinearModel gradient_descent(LogLinearModel model, std::size_t num_examples,
                                const TrainConfig& cfg,
                                const BatchObjective& batch_loss,
                                std::vector<double>* epoch_losses) {
  validate(cfg);
  if (num_examples == 0) throw UsageError("training corpus is empty");
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(num_examples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t steps_per_epoch = (num_examples + bs - 1) / bs;
  const double total_steps =
      static_cast<double>(steps_per_epoch) * static_cast<double>(cfg.epochs);
  std::size_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < num_examples; start += bs) {
      const std::size_t len = std::min(bs, num_examples - start);
      std::span<const std::size_t> idx(order.data() + start, len);
      LossAndGrad lg = batch_loss(model, idx);
      if (!std::isfinite(lg.loss) || !lg.grad.all_finite()) {
        throw RuntimeAbort("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch));
      }
      double lr = cfg.learning_rate;
      if (cfg.schedule == LrSchedule::kLinear) {
        lr *= 1.0 - static_cast<double>(step) / total_steps;
      }
      ++step;
      model.mutable_params().axpy(-lr, lg.grad);
    }
    if (!model.params().all_finite()) {
      throw RuntimeAbort("training diverged: non-finite parameters after epoch " +
                         std::to_string(epoch));
    }
    if (epoch_losses) {
      // Full-data loss at the end of the epoch.
      std::vector<std::size_t> all(num_examples);
      std::iota(all.begin(), all.end(), std::size_t{0});
      double loss = batch_loss(model, all).loss;
      if (!std::isfinite(loss)) {
        throw RuntimeAbort("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch));
      }
      epoch_losses->push_back(loss);
    }
  }
  return model;
}

LogLinearModel train(LogLinearModel model, std::span<const TrainingPair> corpus,
                     const TrainConfig& cfg, std::vector<double>* epoch_losses) {
  if (corpus.empty()) throw UsageError("training corpus is empty");
  std::vector<const TrainingPair*> batch;
  auto objective = [&](const LogLinearModel& m, std::span<const std::size_t> idx) {
    batch.clear();
    for (std::size_t i : idx) batch.push_back(&corpus[i]);
    return xe_loss_and_grad(m, batch, cfg.l2);
  };
  return gradient_descent(std::move(model), corpus.size(), cfg, objective,
                          epoch_losses);
}

double corpus_loss(const LogLinearModel& model,
                   std::span<const TrainingPair> corpus, double l2) {
  return xe_loss_and_grad(model, corpus, l2).loss;
}

}  // namespace faithdec
