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

// Reference-free summary scorers, ROUGE-L and the fitted composite metric.
//
// The faithfulness scorers are lexical proxies: they look only at which
// summary tokens and n-grams are supported by the source. Metric functions
// take EOS-free token spans; Scorer objects strip a trailing EOS themselves.
// An empty summary scores 0 everywhere except novelty (1) and dae_error (1).

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "faithdec/core.hpp"

namespace faithdec {

// Fraction of summary tokens present in the source token set.
double source_precision(std::span<const TokenId> summary,
                        std::span<const TokenId> source);

// Mean over n in {1,2,3} of the fraction of summary n-grams absent from the
// source; n-gram orders the summary is too short for are skipped.
double novelty(std::span<const TokenId> summary, std::span<const TokenId> source);

// 1 when every summary token is supported by the source, else 0.
double factcc_proxy(std::span<const TokenId> summary,
                    std::span<const TokenId> source);

// Share of adjacent summary pairs that never occur adjacently in the source
// (lower is better). A one-token summary falls back to 1 - precision.
double dae_error(std::span<const TokenId> summary, std::span<const TokenId> source);

// F1 between the summary token set and the source token set.
double questeval_proxy(std::span<const TokenId> summary,
                       std::span<const TokenId> source);

std::size_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b);
double rouge_l_f1(std::span<const TokenId> candidate,
                  std::span<const TokenId> reference);

// alpha * precision + (1 - alpha) * novelty.
double combined_heuristic(std::span<const TokenId> summary,
                          std::span<const TokenId> source, double alpha);

struct CompositeMetric {
  std::map<std::string, double> weights;
  double intercept = 0.0;
};

// Feature names consumed by the default composite, in column order.
const std::vector<std::string>& composite_feature_names();

// Linear model over FactCC, DAE, BS-Fact and QuestEval published with the
// original method, with the proxies standing in for those four metrics.
CompositeMetric default_composite();

// Raw (unoriented) feature values for the composite.
std::map<std::string, double> composite_features(std::span<const TokenId> summary,
                                                 std::span<const TokenId> source);

// sum_i w_i * v_i + intercept. Throws ConfigError listing missing names.
double composite_score(const CompositeMetric& c,
                       const std::map<std::string, double>& metric_values);

// Ordinary least squares with intercept on raw features, solved through the
// normal equations by Cholesky. If a pivot is tiny relative to its diagonal
// (< 1e-10) the system is re-solved with 1e-8 added to the diagonal; if a
// column is numerically dependent on earlier ones (relative pivot < 1e-14)
// RuntimeAbort is thrown naming that column.
CompositeMetric fit_composite(const std::vector<std::vector<double>>& features,
                              std::span<const double> labels,
                              const std::vector<std::string>& names);

// Mean squared residual of a composite on a labeled table.
double composite_mse(const CompositeMetric& c,
                     const std::vector<std::vector<double>>& features,
                     std::span<const double> labels,
                     const std::vector<std::string>& names);

// h(summary, source) with a name; higher is always better.
class Scorer {
 public:
  using Fn = std::function<double(std::span<const TokenId>, std::span<const TokenId>)>;

  Scorer(std::string name, Fn fn, TokenId eos_id = kNoToken)
      : name_(std::move(name)), fn_(std::move(fn)), eos_(eos_id) {}

  const std::string& name() const { return name_; }
  bool higher_is_better() const { return true; }

  double operator()(std::span<const TokenId> summary,
                    std::span<const TokenId> source) const {
    return fn_(eos_ == kNoToken ? summary : content(summary, eos_), source);
  }

 private:
  std::string name_;
  Fn fn_;
  TokenId eos_;
};

// Known names: precision, novelty, factcc, dae (scored as 1 - error),
// questeval, composite (default weights), combined@<alpha>.
Scorer make_scorer(const std::string& name, TokenId eos_id);
Scorer make_composite_scorer(CompositeMetric c, TokenId eos_id,
                             std::string name = "composite");
Scorer make_combined_scorer(double alpha, TokenId eos_id);
bool is_known_scorer(const std::string& name);

}  // namespace faithdec
