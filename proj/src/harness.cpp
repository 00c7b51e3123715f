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

#include "faithdec/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

namespace faithdec {

namespace {

const std::vector<std::string> kExperimentHead = {"recipe", "label"};
const std::vector<std::string> kExperimentTail = {
    "rouge_l", "mean_length", "model_calls_per_summary", "seconds_per_summary_median",
    "seconds_per_summary_iqr"};

const std::map<std::string, std::vector<std::string>>& fixed_schemas() {
  static const std::map<std::string, std::vector<std::string>> schemas = {
      {"sweep", {"axis", "value", "recipe", "scorer", "score", "model_calls_per_summary"}},
      {"timing",
       {"recipe", "repeats", "seconds_per_summary_median", "seconds_per_summary_iqr",
        "model_calls_per_summary", "model_calls_total"}},
      {"tune", {"weight", "objective"}},
      {"max_top", {"beam_size", "scorer", "mean_top", "mean_max"}},
      {"profile", {"step", "prefix", "scorer", "score"}},
      {"distill",
       {"round", "scorer", "score", "teacher_calls_per_example",
        "student_calls_per_example"}},
  };
  return schemas;
}

const std::set<std::string>& string_columns() {
  static const std::set<std::string> cols = {"recipe", "label", "axis", "scorer", "prefix"};
  return cols;
}

struct SplitView {
  std::vector<Document> docs;
  std::vector<TokenSeq> refs;
};

SplitView view(const Corpus& corpus, const std::string& split, std::size_t limit) {
  const auto& ex = corpus.split(split);
  const std::size_t n = limit == 0 ? ex.size() : std::min(limit, ex.size());
  SplitView v;
  for (std::size_t i = 0; i < n; ++i) {
    v.docs.push_back(ex[i].source);
    v.refs.push_back(ex[i].reference);
  }
  return v;
}

std::vector<Scorer> make_scorers(const std::vector<std::string>& names, TokenId eos) {
  std::vector<Scorer> out;
  for (const auto& n : names) out.push_back(make_scorer(n, eos));
  return out;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

std::string csv_cell(const Json& cell) {
  if (!cell.is_string()) return cell.dump();
  const auto& s = cell.get_ref<const std::string&>();
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void Report::add_row(std::vector<Json> cells) {
  if (cells.size() != columns.size()) {
    throw UsageError("report row has " + std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(columns.size()));
  }
  rows.push_back(std::move(cells));
}

const Json& Report::at(std::size_t row, const std::string& column) const {
  const auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) throw UsageError("no report column '" + column + "'");
  return rows.at(row).at(static_cast<std::size_t>(it - columns.begin()));
}

std::vector<std::string> report_schema(const std::string& type,
                                       const std::vector<std::string>& scorers) {
  if (type == "experiment") {
    std::vector<std::string> cols = kExperimentHead;
    cols.insert(cols.end(), scorers.begin(), scorers.end());
    cols.insert(cols.end(), kExperimentTail.begin(), kExperimentTail.end());
    return cols;
  }
  const auto it = fixed_schemas().find(type);
  if (it == fixed_schemas().end()) throw ConfigError("unknown report type '" + type + "'");
  return it->second;
}

void validate_report(const Report& r) {
  std::vector<std::string> expected;
  if (r.type == "experiment") {
    const std::size_t fixed = kExperimentHead.size() + kExperimentTail.size();
    if (r.columns.size() <= fixed) {
      throw RuntimeAbort("experiment report has no scorer columns");
    }
    std::vector<std::string> scorers(r.columns.begin() + kExperimentHead.size(),
                                     r.columns.end() - kExperimentTail.size());
    for (const auto& s : scorers) {
      if (!is_known_scorer(s)) throw RuntimeAbort("report column '" + s + "' is not a scorer");
    }
    expected = report_schema(r.type, scorers);
  } else {
    try {
      expected = report_schema(r.type);
    } catch (const ConfigError& e) {
      throw RuntimeAbort(e.what());
    }
  }
  if (r.columns != expected) {
    throw RuntimeAbort("report columns do not match the '" + r.type + "' schema");
  }
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    if (row.size() != r.columns.size()) {
      throw RuntimeAbort("report row " + std::to_string(i) + " has the wrong width");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      const bool want_string = string_columns().count(r.columns[c]) > 0;
      const bool ok = want_string ? row[c].is_string()
                                  : row[c].is_number() &&
                                        std::isfinite(row[c].get<double>());
      if (!ok) {
        throw RuntimeAbort("report row " + std::to_string(i) + ", column '" + r.columns[c] +
                           "' holds " + row[c].dump());
      }
    }
  }
}

std::string report_to_csv(const Report& r) {
  validate_report(r);
  std::string out;
  for (std::size_t c = 0; c < r.columns.size(); ++c) {
    if (c) out += ',';
    out += r.columns[c];
  }
  out += '\n';
  for (const auto& row : r.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += csv_cell(row[c]);
    }
    out += '\n';
  }
  return out;
}

Json report_to_json(const Report& r) {
  validate_report(r);
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json obj = Json::object();
    for (std::size_t c = 0; c < row.size(); ++c) obj[r.columns[c]] = row[c];
    rows.push_back(std::move(obj));
  }
  return Json{{"report", r.type}, {"columns", r.columns}, {"config", r.config},
              {"rows", std::move(rows)}};
}

Report report_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("report") || !j.contains("columns") ||
      !j.contains("rows")) {
    throw ConfigError("report JSON needs 'report', 'columns' and 'rows'");
  }
  Report r;
  try {
    r.type = j.at("report").get<std::string>();
    r.columns = j.at("columns").get<std::vector<std::string>>();
    if (j.contains("config")) r.config = j.at("config");
    for (const auto& obj : j.at("rows")) {
      std::vector<Json> cells;
      for (const auto& c : r.columns) {
        if (!obj.contains(c)) throw ConfigError("report row is missing '" + c + "'");
        cells.push_back(obj.at(c));
      }
      if (obj.size() != r.columns.size()) throw ConfigError("report row has extra fields");
      r.rows.push_back(std::move(cells));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("report JSON: ") + e.what());
  }
  try {
    validate_report(r);
  } catch (const RuntimeAbort& e) {
    throw ConfigError(e.what());
  }
  return r;
}

void write_report(const Report& r, const std::filesystem::path& stem) {
  const std::string csv = report_to_csv(r);
  const std::string json = report_to_json(r).dump(2) + "\n";
  write_file(std::filesystem::path(stem.string() + ".csv"), csv);
  write_file(std::filesystem::path(stem.string() + ".json"), json);
}

bool is_wall_clock_column(const std::string& column) {
  return column.rfind("seconds", 0) == 0;
}

const std::vector<std::string>& default_scorer_names() {
  static const std::vector<std::string> names = {"precision", "novelty", "factcc",
                                                 "dae",       "questeval", "composite"};
  return names;
}

LogLinearModel train_baseline(const Corpus& corpus, const TrainConfig& cfg,
                              std::vector<double>* epoch_losses) {
  validate(cfg);
  if (corpus.train.empty()) throw ConfigError("training split is empty");
  auto init = LogLinearModel::random_init(corpus.vocab.size(), corpus.vocab.bos_id(),
                                          corpus.vocab.eos_id(), cfg.seed);
  return train(std::move(init), training_pairs(corpus.train), cfg, epoch_losses);
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("experiment config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "recipes" && key != "scorers" && key != "decode" && key != "split" &&
        key != "limit") {
      throw ConfigError("experiment config: unknown field '" + key + "'");
    }
  }
  ExperimentConfig c;
  try {
    if (j.contains("recipes")) {
      for (const auto& r : j.at("recipes")) c.recipes.push_back(recipe_from_json(r));
    }
    if (j.contains("scorers")) c.scorers = j.at("scorers").get<std::vector<std::string>>();
    if (j.contains("decode")) c.decode = decode_config_from_json(j.at("decode"));
    if (j.contains("split")) c.split = j.at("split").get<std::string>();
    if (j.contains("limit")) c.limit = j.at("limit").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  return c;
}

Json experiment_config_to_json(const ExperimentConfig& c) {
  Json recipes = Json::array();
  for (const auto& r : c.recipes) recipes.push_back(recipe_to_json(r));
  return Json{{"recipes", std::move(recipes)},
              {"scorers", c.scorers},
              {"decode", decode_config_to_json(c.decode)},
              {"split", c.split},
              {"limit", c.limit}};
}

void validate(const ExperimentConfig& cfg, std::size_t vocab_size) {
  validate(cfg.decode);
  if (cfg.scorers.empty()) throw ConfigError("at least one scorer is required");
  std::set<std::string> seen;
  for (const auto& s : cfg.scorers) {
    make_scorer(s, kNoToken);
    if (!seen.insert(s).second) throw ConfigError("scorer '" + s + "' listed twice");
  }
  for (const auto& r : cfg.recipes) validate(r, vocab_size);
  if (cfg.split != "train" && cfg.split != "dev" && cfg.split != "test") {
    throw ConfigError("unknown split '" + cfg.split + "'");
  }
}

Report run_experiment(const ConditionalModel& model, const Corpus& corpus,
                      const ExperimentConfig& cfg) {
  validate(cfg, model.vocab_size());
  if (cfg.recipes.empty()) throw ConfigError("no recipes to run");
  const auto v = view(corpus, cfg.split, cfg.limit);
  const auto scorers = make_scorers(cfg.scorers, model.eos_id());

  Report rep;
  rep.type = "experiment";
  rep.columns = report_schema("experiment", cfg.scorers);
  rep.config = experiment_config_to_json(cfg);
  for (const auto& r : cfg.recipes) {
    RecipeStats st = evaluate_recipe(model, v.docs, v.refs, r, scorers, cfg.decode);
    std::vector<Json> row = {recipe_kind_name(r.kind), st.label};
    for (const auto& s : cfg.scorers) row.emplace_back(st.metric_means.at(s));
    row.emplace_back(st.rouge_l);
    row.emplace_back(st.mean_length);
    row.emplace_back(st.model_calls_per_summary);
    row.emplace_back(st.seconds_median);
    row.emplace_back(st.seconds_iqr);
    rep.add_row(std::move(row));
  }
  validate_report(rep);
  return rep;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "beam_size") return SweepAxis::kBeamSize;
  if (name == "top_p") return SweepAxis::kTopP;
  if (name == "lookahead_weight") return SweepAxis::kLookaheadWeight;
  if (name == "alpha") return SweepAxis::kAlpha;
  throw ConfigError("unknown sweep axis '" + name + "'");
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kBeamSize:
      return "beam_size";
    case SweepAxis::kTopP:
      return "top_p";
    case SweepAxis::kLookaheadWeight:
      return "lookahead_weight";
    case SweepAxis::kAlpha:
      return "alpha";
  }
  return "unknown";
}

Recipe default_sweep_recipe(SweepAxis axis) {
  Recipe r;
  switch (axis) {
    case SweepAxis::kBeamSize:
      r.kind = RecipeKind::kBeam;
      break;
    case SweepAxis::kTopP:
      r.kind = RecipeKind::kNucleus;
      break;
    case SweepAxis::kLookaheadWeight:
    case SweepAxis::kAlpha:
      r.kind = RecipeKind::kBeamLookahead;
      break;
  }
  return r;
}

namespace {

Recipe at_value(Recipe r, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::kBeamSize:
      if (value < 1 || value != std::floor(value)) {
        throw ConfigError("beam sizes must be positive integers");
      }
      r.beam_width = static_cast<int>(value);
      break;
    case SweepAxis::kTopP:
      r.top_p = value;
      break;
    case SweepAxis::kLookaheadWeight:
      r.lookahead.weight = value;
      break;
    case SweepAxis::kAlpha:
      r.lookahead.scorer = make_combined_scorer(value, kNoToken).name();
      break;
  }
  return r;
}

}  // namespace

Report sweep(const ConditionalModel& model, const Corpus& corpus,
             const ExperimentConfig& cfg, SweepAxis axis, const Recipe& base,
             const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<Recipe> recipes;
  for (double v : values) recipes.push_back(at_value(base, axis, v));
  ExperimentConfig check = cfg;
  check.recipes = recipes;
  validate(check, model.vocab_size());

  const auto v = view(corpus, cfg.split, cfg.limit);
  const auto scorers = make_scorers(cfg.scorers, model.eos_id());
  Report rep;
  rep.type = "sweep";
  rep.columns = report_schema("sweep");
  rep.config = experiment_config_to_json(cfg);
  rep.config["axis"] = sweep_axis_name(axis);
  rep.config["values"] = values;
  rep.config["base_recipe"] = recipe_to_json(base);
  const std::string axis_name = sweep_axis_name(axis);
  for (std::size_t i = 0; i < values.size(); ++i) {
    RecipeStats st = evaluate_recipe(model, v.docs, v.refs, recipes[i], scorers, cfg.decode);
    const std::string label = recipe_label(recipes[i]);
    for (const auto& s : cfg.scorers) {
      rep.add_row({axis_name, values[i], label, s, st.metric_means.at(s),
                   st.model_calls_per_summary});
    }
    rep.add_row({axis_name, values[i], label, "rouge_l", st.rouge_l,
                 st.model_calls_per_summary});
  }
  validate_report(rep);
  return rep;
}

TimingResult timing(const ConditionalModel& model, std::span<const Document> docs,
                    const Recipe& recipe, const DecodeConfig& dcfg, int repeats) {
  if (repeats < 3) throw ConfigError("timing needs at least 3 repeats");
  if (docs.empty()) throw ConfigError("timing needs at least one document");
  validate(recipe, model.vocab_size());
  TimingResult res;
  res.recipe = recipe_label(recipe);
  res.repeats = repeats;
  std::vector<double> per_summary;
  for (int rep = 0; rep < repeats; ++rep) {
    const std::uint64_t before = model.calls();
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < docs.size(); ++i) {
      DecodeConfig d = dcfg;
      d.seed = document_seed(dcfg.seed, i);
      run_recipe(model, docs[i], recipe, d);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    per_summary.push_back(secs / static_cast<double>(docs.size()));
    const std::uint64_t calls = model.calls() - before;
    if (rep > 0 && calls != res.model_calls_total) {
      throw RuntimeAbort("model-call count changed between timing repeats");
    }
    res.model_calls_total = calls;
  }
  res.seconds_median = quantile(per_summary, 0.5);
  res.seconds_iqr = quantile(per_summary, 0.75) - quantile(per_summary, 0.25);
  res.model_calls_per_summary =
      static_cast<double>(res.model_calls_total) / static_cast<double>(docs.size());
  return res;
}

Report timing_report(const std::vector<TimingResult>& results, const Json& config) {
  Report rep;
  rep.type = "timing";
  rep.columns = report_schema("timing");
  rep.config = config;
  for (const auto& r : results) {
    rep.add_row({r.recipe, r.repeats, r.seconds_median, r.seconds_iqr,
                 r.model_calls_per_summary, r.model_calls_total});
  }
  validate_report(rep);
  return rep;
}

WeightSearch tune_lookahead_weight(const ConditionalModel& model, const Corpus& corpus,
                                   const ExperimentConfig& cfg, const Recipe& base,
                                   const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("weight grid is empty");
  ExperimentConfig dev = cfg;
  dev.split = "dev";
  Report swept = sweep(model, corpus, dev, SweepAxis::kLookaheadWeight, base, grid);

  WeightSearch out;
  out.report.type = "tune";
  out.report.columns = report_schema("tune");
  out.report.config = swept.config;
  double best = -std::numeric_limits<double>::infinity();
  const std::size_t per_value = cfg.scorers.size() + 1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < per_value; ++k) {
      total += swept.at(i * per_value + k, "score").get<double>();
    }
    const double objective = total / static_cast<double>(per_value);
    out.report.add_row({grid[i], objective});
    if (objective > best) {
      best = objective;
      out.best_weight = grid[i];
    }
  }
  out.report.config["best_weight"] = out.best_weight;
  validate_report(out.report);
  return out;
}

Report max_top_report(const ConditionalModel& model, std::span<const Document> docs,
                      const std::vector<int>& beam_sizes,
                      const std::vector<std::string>& scorers, const DecodeConfig& dcfg) {
  if (beam_sizes.empty()) throw ConfigError("no beam sizes given");
  for (int k : beam_sizes) {
    if (k < 1) throw ConfigError("beam sizes must be >= 1");
  }
  std::vector<Document> d(docs.begin(), docs.end());
  auto rows = max_top_analysis(model, d, beam_sizes, make_scorers(scorers, model.eos_id()),
                               dcfg);
  Report rep;
  rep.type = "max_top";
  rep.columns = report_schema("max_top");
  rep.config = Json{{"beam_sizes", beam_sizes},
                    {"scorers", scorers},
                    {"decode", decode_config_to_json(dcfg)},
                    {"documents", docs.size()}};
  for (const auto& r : rows) rep.add_row({r.beam_size, r.scorer, r.mean_top, r.mean_max});
  validate_report(rep);
  return rep;
}

Report prefix_profile_report(const ConditionalModel& model, const Vocabulary& vocab,
                             const Document& doc, const Recipe& recipe,
                             const std::vector<std::string>& scorers,
                             const DecodeConfig& dcfg) {
  validate(recipe, model.vocab_size());
  const Hypothesis out = run_recipe(model, doc, recipe, dcfg).output;
  const auto y = content(out.tokens, model.eos_id());
  const auto prefixes = prefix_chain(TokenSeq(y.begin(), y.end()));
  const auto series = prefix_rollout_profile(model, doc, prefixes,
                                             make_scorers(scorers, model.eos_id()), dcfg);
  Report rep;
  rep.type = "profile";
  rep.columns = report_schema("profile");
  rep.config = Json{{"document", doc.id},
                    {"recipe", recipe_to_json(recipe)},
                    {"scorers", scorers},
                    {"decode", decode_config_to_json(dcfg)}};
  for (std::size_t t = 0; t < prefixes.size(); ++t) {
    const std::string prefix = detokenize(vocab, prefixes[t]);
    for (std::size_t s = 0; s < scorers.size(); ++s) {
      rep.add_row({Json(t), Json(prefix), Json(scorers[s]), Json(series[s][t])});
    }
  }
  validate_report(rep);
  return rep;
}

Report distill_report(const std::vector<DistillRound>& rounds,
                      const std::vector<std::string>& scorers, const Json& config) {
  Report rep;
  rep.type = "distill";
  rep.columns = report_schema("distill");
  rep.config = config;
  std::vector<std::string> names = scorers;
  names.push_back("rouge_l");
  names.push_back("mean_length");
  for (const auto& r : rounds) {
    for (const auto& n : names) {
      rep.add_row({r.round, n, r.report.at(n), r.teacher_calls_per_example,
                   r.student_calls_per_example});
    }
  }
  validate_report(rep);
  return rep;
}

}  // namespace faithdec
