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

#include "faithdec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_set>

namespace faithdec {

namespace {

std::unordered_set<TokenId> token_set(std::span<const TokenId> tokens) {
  return {tokens.begin(), tokens.end()};
}

std::set<std::vector<TokenId>> ngram_set(std::span<const TokenId> tokens,
                                         std::size_t n) {
  std::set<std::vector<TokenId>> out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    out.emplace(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
  }
  return out;
}

}  // namespace

double source_precision(std::span<const TokenId> summary,
                        std::span<const TokenId> source) {
  if (summary.empty()) return 0.0;
  auto src = token_set(source);
  std::size_t hit = 0;
  for (TokenId t : summary) hit += src.count(t);
  return static_cast<double>(hit) / static_cast<double>(summary.size());
}

double novelty(std::span<const TokenId> summary, std::span<const TokenId> source) {
  if (summary.empty()) return 1.0;
  double total = 0.0;
  int levels = 0;
  for (std::size_t n = 1; n <= 3; ++n) {
    if (summary.size() < n) continue;
    auto src = ngram_set(source, n);
    std::size_t count = 0;
    std::size_t novel = 0;
    for (std::size_t i = 0; i + n <= summary.size(); ++i) {
      std::vector<TokenId> gram(summary.begin() + static_cast<std::ptrdiff_t>(i),
                                summary.begin() + static_cast<std::ptrdiff_t>(i + n));
      ++count;
      if (!src.count(gram)) ++novel;
    }
    total += static_cast<double>(novel) / static_cast<double>(count);
    ++levels;
  }
  return total / levels;
}

double factcc_proxy(std::span<const TokenId> summary,
                    std::span<const TokenId> source) {
  if (summary.empty()) return 0.0;
  auto src = token_set(source);
  return std::all_of(summary.begin(), summary.end(),
                     [&](TokenId t) { return src.count(t) > 0; })
             ? 1.0
             : 0.0;
}

double dae_error(std::span<const TokenId> summary, std::span<const TokenId> source) {
  if (summary.empty()) return 1.0;
  if (summary.size() == 1) return 1.0 - source_precision(summary, source);
  auto arcs = ngram_set(source, 2);
  std::size_t bad = 0;
  for (std::size_t i = 0; i + 1 < summary.size(); ++i) {
    if (!arcs.count({summary[i], summary[i + 1]})) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(summary.size() - 1);
}

double questeval_proxy(std::span<const TokenId> summary,
                       std::span<const TokenId> source) {
  auto sum = token_set(summary);
  auto src = token_set(source);
  if (sum.empty() || src.empty()) return 0.0;
  std::size_t shared = 0;
  for (TokenId t : sum) shared += src.count(t);
  if (shared == 0) return 0.0;
  const double p = static_cast<double>(shared) / static_cast<double>(sum.size());
  const double r = static_cast<double>(shared) / static_cast<double>(src.size());
  return 2.0 * p * r / (p + r);
}

std::size_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_f1(std::span<const TokenId> candidate,
                  std::span<const TokenId> reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const double l = static_cast<double>(lcs_length(candidate, reference));
  const double p = l / static_cast<double>(candidate.size());
  const double r = l / static_cast<double>(reference.size());
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double combined_heuristic(std::span<const TokenId> summary,
                          std::span<const TokenId> source, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must be in [0, 1]");
  return alpha * source_precision(summary, source) +
         (1.0 - alpha) * novelty(summary, source);
}

// ---------------------------------------------------------------------------
// Composite

const std::vector<std::string>& composite_feature_names() {
  static const std::vector<std::string> names = {"factcc", "dae_error", "precision",
                                                 "questeval"};
  return names;
}

CompositeMetric default_composite() {
  return CompositeMetric{
      {{"factcc", 0.29}, {"dae_error", -0.29}, {"precision", 1.97}, {"questeval", 0.94}},
      -1.91};
}

std::map<std::string, double> composite_features(std::span<const TokenId> summary,
                                                 std::span<const TokenId> source) {
  return {{"factcc", factcc_proxy(summary, source)},
          {"dae_error", dae_error(summary, source)},
          {"precision", source_precision(summary, source)},
          {"questeval", questeval_proxy(summary, source)}};
}

double composite_score(const CompositeMetric& c,
                       const std::map<std::string, double>& metric_values) {
  std::vector<std::string> missing;
  double total = c.intercept;
  for (const auto& [name, w] : c.weights) {
    auto it = metric_values.find(name);
    if (it == metric_values.end()) {
      missing.push_back(name);
      continue;
    }
    total += w * it->second;
  }
  if (!missing.empty()) {
    std::string msg = "composite_score: missing metric values for";
    for (const auto& m : missing) msg += " '" + m + "'";
    throw ConfigError(msg);
  }
  return total;
}

CompositeMetric fit_composite(const std::vector<std::vector<double>>& features,
                              std::span<const double> labels,
                              const std::vector<std::string>& names) {
  const std::size_t n = features.size();
  const std::size_t m = names.size();
  if (labels.size() != n) throw UsageError("fit_composite: label count mismatch");
  for (const auto& row : features) {
    if (row.size() != m) throw UsageError("fit_composite: ragged feature matrix");
  }
  if (n <= m) {
    throw UsageError("fit_composite needs more rows than feature columns");
  }

  // Column 0 is the intercept; columns 1..m are the features.
  const std::size_t d = m + 1;
  auto column_name = [&](std::size_t j) { return j == 0 ? std::string("intercept") : names[j - 1]; };
  auto x = [&](std::size_t i, std::size_t j) { return j == 0 ? 1.0 : features[i][j - 1]; };

  std::vector<double> gram(d * d, 0.0);
  std::vector<double> rhs(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = x(i, a);
      rhs[a] += xa * labels[i];
      for (std::size_t b = 0; b <= a; ++b) gram[a * d + b] += xa * x(i, b);
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) gram[a * d + b] = gram[b * d + a];
  }

  // Lower-triangular Cholesky; returns false if a pivot needs the ridge.
  std::vector<double> chol(d * d);
  auto factor = [&](double ridge) {
    std::fill(chol.begin(), chol.end(), 0.0);
    bool clean = true;
    for (std::size_t j = 0; j < d; ++j) {
      double diag = gram[j * d + j];
      double s = diag + ridge;
      for (std::size_t k = 0; k < j; ++k) s -= chol[j * d + k] * chol[j * d + k];
      const double scale = diag > 0.0 ? diag : 1.0;
      const double rel = (s - ridge) / scale;
      if (ridge == 0.0 && rel < 1e-14) {
        throw RuntimeAbort("fit_composite: column '" + column_name(j) +
                           "' is linearly dependent on earlier columns");
      }
      if (rel < 1e-10) clean = false;
      if (s <= 0.0) {
        throw RuntimeAbort("fit_composite: column '" + column_name(j) +
                           "' is rank-deficient even with ridge");
      }
      const double ljj = std::sqrt(s);
      chol[j * d + j] = ljj;
      for (std::size_t i = j + 1; i < d; ++i) {
        double t = gram[i * d + j];
        for (std::size_t k = 0; k < j; ++k) t -= chol[i * d + k] * chol[j * d + k];
        chol[i * d + j] = t / ljj;
      }
    }
    return clean;
  };
  if (!factor(0.0)) factor(1e-8);

  std::vector<double> z(d);
  for (std::size_t i = 0; i < d; ++i) {
    double t = rhs[i];
    for (std::size_t k = 0; k < i; ++k) t -= chol[i * d + k] * z[k];
    z[i] = t / chol[i * d + i];
  }
  std::vector<double> beta(d);
  for (std::size_t i = d; i-- > 0;) {
    double t = z[i];
    for (std::size_t k = i + 1; k < d; ++k) t -= chol[k * d + i] * beta[k];
    beta[i] = t / chol[i * d + i];
  }

  CompositeMetric out;
  out.intercept = beta[0];
  for (std::size_t j = 0; j < m; ++j) out.weights[names[j]] = beta[j + 1];
  return out;
}

double composite_mse(const CompositeMetric& c,
                     const std::vector<std::vector<double>>& features,
                     std::span<const double> labels,
                     const std::vector<std::string>& names) {
  double sse = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    double pred = c.intercept;
    for (std::size_t j = 0; j < names.size(); ++j) {
      pred += c.weights.at(names[j]) * features[i][j];
    }
    sse += (pred - labels[i]) * (pred - labels[i]);
  }
  return sse / static_cast<double>(features.size());
}

// ---------------------------------------------------------------------------
// Scorers

Scorer make_composite_scorer(CompositeMetric c, TokenId eos_id, std::string name) {
  return Scorer(
      std::move(name),
      [c = std::move(c)](std::span<const TokenId> s, std::span<const TokenId> x) {
        return composite_score(c, composite_features(s, x));
      },
      eos_id);
}

Scorer make_combined_scorer(double alpha, TokenId eos_id) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  std::ostringstream name;
  name << "combined@" << alpha;
  return Scorer(
      name.str(),
      [alpha](std::span<const TokenId> s, std::span<const TokenId> x) {
        return combined_heuristic(s, x, alpha);
      },
      eos_id);
}

Scorer make_scorer(const std::string& name, TokenId eos_id) {
  if (name == "precision") return Scorer(name, source_precision, eos_id);
  if (name == "novelty") return Scorer(name, novelty, eos_id);
  if (name == "factcc") return Scorer(name, factcc_proxy, eos_id);
  if (name == "questeval") return Scorer(name, questeval_proxy, eos_id);
  if (name == "dae") {
    return Scorer(
        name,
        [](std::span<const TokenId> s, std::span<const TokenId> x) {
          return 1.0 - dae_error(s, x);
        },
        eos_id);
  }
  if (name == "composite") return make_composite_scorer(default_composite(), eos_id);
  if (name.rfind("combined@", 0) == 0) {
    std::size_t used = 0;
    double alpha = 0.0;
    try {
      alpha = std::stod(name.substr(9), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != name.size() - 9) {
      throw ConfigError("bad combined scorer name '" + name + "'");
    }
    return make_combined_scorer(alpha, eos_id);
  }
  throw ConfigError("unknown scorer '" + name + "'");
}

bool is_known_scorer(const std::string& name) {
  try {
    make_scorer(name, kNoToken);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

}  // namespace faithdec
