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

#include "faithdec/faithdec.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "faithdec/harness.hpp"

struct fd_corpus {
  faithdec::Corpus corpus;
};

struct fd_model {
  faithdec::LogLinearModel model;
};

namespace {

using faithdec::Json;

thread_local std::string g_last_error;

fd_status fail(fd_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename F>
fd_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return FD_OK;
  } catch (const faithdec::ConfigError& e) {
    return fail(FD_ERR_CONFIG, e.what());
  } catch (const faithdec::UsageError& e) {
    return fail(FD_ERR_USAGE, e.what());
  } catch (const faithdec::RuntimeAbort& e) {
    return fail(FD_ERR_RUNTIME, e.what());
  } catch (const Json::exception& e) {
    return fail(FD_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(FD_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(FD_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(FD_ERR_RUNTIME, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw faithdec::UsageError(std::string(what) + " must not be NULL");
}

char* to_c_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  if (out != nullptr) *out = to_c_string(s);
}

Json parse_config(const char* text) {
  if (text == nullptr || *text == '\0') return Json::object();
  Json j = faithdec::parse_json(text, "config");
  if (!j.is_object()) throw faithdec::ConfigError("config must be a JSON object");
  return j;
}

// Removes and returns j[key], or `fallback` when absent.
Json take(Json& j, const char* key, Json fallback = nullptr) {
  if (!j.contains(key)) return fallback;
  Json v = std::move(j[key]);
  j.erase(key);
  return v;
}

std::vector<std::string> scorer_list(const Json& v) {
  if (v.is_null()) return faithdec::default_scorer_names();
  return v.get<std::vector<std::string>>();
}

faithdec::Recipe recipe_or_greedy(const Json& v) {
  return v.is_null() ? faithdec::Recipe{} : faithdec::recipe_from_json(v);
}

faithdec::ExperimentConfig experiment_config(Json j, std::uint64_t seed) {
  faithdec::ExperimentConfig c = faithdec::experiment_config_from_json(j);
  c.decode.seed = seed;
  return c;
}

Json labels_summary_config(const faithdec::DistillConfig& cfg,
                           const std::vector<std::string>& scorers,
                           const std::string& eval_split, std::uint64_t seed) {
  Json c = faithdec::distill_config_to_json(cfg);
  c["scorers"] = scorers;
  c["eval_split"] = eval_split;
  c["seed"] = seed;
  return c;
}

}  // namespace

extern "C" {

const char* fd_version(void) { return "0.1.0"; }

const char* fd_last_error(void) { return g_last_error.c_str(); }

void fd_string_free(char* s) { std::free(s); }

fd_status fd_corpus_generate(const char* config_json, uint64_t seed, fd_corpus** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto cfg = faithdec::corpus_config_from_json(parse_config(config_json));
    cfg.seed = seed;
    *out = new fd_corpus{faithdec::generate_corpus(cfg)};
  });
}

fd_status fd_corpus_load(const char* dir, fd_corpus** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = nullptr;
    *out = new fd_corpus{faithdec::load_corpus(dir)};
  });
}

fd_status fd_corpus_save(const fd_corpus* corpus, const char* dir) {
  return guarded([&] {
    require(corpus, "corpus");
    require(dir, "dir");
    faithdec::save_corpus(corpus->corpus, dir);
  });
}

fd_status fd_corpus_describe(const fd_corpus* corpus, char** out_json) {
  return guarded([&] {
    require(corpus, "corpus");
    require(out_json, "out_json");
    const auto& c = corpus->corpus;
    double precision = 0.0;
    std::size_t n = 0;
    for (const auto* split : {&c.train, &c.dev, &c.test}) {
      for (const auto& ex : *split) {
        precision += faithdec::source_precision(faithdec::content(ex.reference, c.vocab.eos_id()),
                                                ex.source.tokens);
        ++n;
      }
    }
    Json j{{"vocab_size", c.vocab.size()},
           {"train", c.train.size()},
           {"dev", c.dev.size()},
           {"test", c.test.size()},
           {"reference_precision", n ? 100.0 * precision / static_cast<double>(n) : 0.0}};
    emit(out_json, j.dump(2));
  });
}

void fd_corpus_free(fd_corpus* corpus) { delete corpus; }

fd_status fd_model_train(const fd_corpus* corpus, const char* config_json, uint64_t seed,
                         fd_model** out, char** out_json) {
  return guarded([&] {
    require(corpus, "corpus");
    require(out, "out");
    *out = nullptr;
    auto cfg = faithdec::train_config_from_json(parse_config(config_json));
    cfg.seed = seed;
    std::vector<double> losses;
    auto model = faithdec::train_baseline(corpus->corpus, cfg, &losses);
    Json j{{"config", faithdec::train_config_to_json(cfg)}, {"epoch_losses", losses}};
    emit(out_json, j.dump(2));
    *out = new fd_model{std::move(model)};
  });
}

fd_status fd_model_load(const fd_corpus* corpus, const char* path, fd_model** out) {
  return guarded([&] {
    require(corpus, "corpus");
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    Json j = faithdec::parse_json(faithdec::read_file(path), path);
    *out = new fd_model{faithdec::model_from_json(j, corpus->corpus.vocab)};
  });
}

fd_status fd_model_save(const fd_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    faithdec::write_file(path, faithdec::model_to_json(model->model).dump() + "\n");
  });
}

uint64_t fd_model_calls(const fd_model* model) {
  return model == nullptr ? 0 : model->model.calls();
}

void fd_model_free(fd_model* model) { delete model; }

fd_status fd_decode(const fd_model* model, const fd_corpus* corpus, const char* config_json,
                    uint64_t seed, char** out_jsonl, char** out_report_json) {
  return guarded([&] {
    require(model, "model");
    require(corpus, "corpus");
    Json j = parse_config(config_json);
    const faithdec::Recipe recipe = recipe_or_greedy(take(j, "recipe"));
    const bool want_trace = take(j, "trace", false).get<bool>();
    auto cfg = experiment_config(j, seed);
    cfg.recipes = {recipe};
    faithdec::validate(cfg, model->model.vocab_size());

    const auto& m = model->model;
    const auto& vocab = corpus->corpus.vocab;
    const auto eos = vocab.eos_id();
    std::vector<faithdec::Scorer> scorers;
    for (const auto& s : cfg.scorers) scorers.push_back(faithdec::make_scorer(s, eos));

    if (out_jsonl != nullptr) {
      const auto& split = corpus->corpus.split(cfg.split);
      const std::size_t n =
          cfg.limit == 0 ? split.size() : std::min(cfg.limit, split.size());
      const std::string label = faithdec::recipe_label(recipe);
      std::string lines;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& doc = split[i].source;
        faithdec::DecodeConfig d = cfg.decode;
        d.seed = faithdec::document_seed(cfg.decode.seed, i);
        faithdec::LookaheadTrace trace;
        auto res = faithdec::run_recipe(m, doc, recipe, d, want_trace ? &trace : nullptr);
        Json scores = Json::object();
        for (const auto& s : scorers) scores[s.name()] = s(res.output.tokens, doc.tokens);
        Json line{{"id", doc.id},
                  {"recipe", label},
                  {"seed", d.seed},
                  {"summary", faithdec::tokens_to_json(vocab, faithdec::content(res.output.tokens, eos))},
                  {"logprob", res.output.logprob},
                  {"scores", std::move(scores)}};
        Json cands = Json::array();
        if (faithdec::uses_ranking(recipe.kind)) {
          auto ranked = faithdec::rank_candidates(
              res.candidates, faithdec::make_scorer(recipe.rank_scorer, eos), doc);
          for (const auto& c : ranked) {
            cands.push_back(Json{
                {"summary", faithdec::tokens_to_json(vocab, faithdec::content(c.hypothesis.tokens, eos))},
                {"logprob", c.hypothesis.logprob},
                {"rank_score", c.rank_score},
                {"source_rank", c.source_rank}});
          }
        } else {
          for (const auto& c : res.candidates) {
            cands.push_back(Json{
                {"summary", faithdec::tokens_to_json(vocab, faithdec::content(c.tokens, eos))},
                {"logprob", c.logprob}});
          }
        }
        line["candidates"] = std::move(cands);
        if (want_trace && faithdec::uses_lookahead(recipe.kind)) {
          line["trace"] = faithdec::trace_to_json(vocab, trace);
        }
        lines += line.dump();
        lines += '\n';
      }
      *out_jsonl = to_c_string(lines);
    }
    if (out_report_json != nullptr) {
      try {
        auto rep = faithdec::run_experiment(m, corpus->corpus, cfg);
        *out_report_json = to_c_string(faithdec::report_to_json(rep).dump(2));
      } catch (...) {
        if (out_jsonl != nullptr) {
          std::free(*out_jsonl);
          *out_jsonl = nullptr;
        }
        throw;
      }
    }
  });
}

fd_status fd_distill(const fd_model* teacher, const fd_corpus* corpus, const char* config_json,
                     uint64_t seed, fd_model** out_student, char** out_labels_jsonl,
                     char** out_report_json) {
  return guarded([&] {
    require(teacher, "teacher");
    require(corpus, "corpus");
    Json j = parse_config(config_json);
    const auto scorers = scorer_list(take(j, "scorers"));
    const auto eval_split = take(j, "eval_split", "test").get<std::string>();
    auto cfg = faithdec::distill_config_from_json(j);
    cfg.iterations = 1;
    cfg.decode.seed = seed;
    cfg.train.seed = seed;
    std::vector<faithdec::Scorer> sc;
    for (const auto& s : scorers) {
      sc.push_back(faithdec::make_scorer(s, corpus->corpus.vocab.eos_id()));
    }
    faithdec::validate(cfg.teacher, teacher->model.vocab_size());
    auto rounds = faithdec::iterative_distill(teacher->model, corpus->corpus, cfg, sc, eval_split);
    auto rep = faithdec::distill_report(rounds, scorers,
                                        labels_summary_config(cfg, scorers, eval_split, seed));
    const std::string labels =
        faithdec::pseudo_labels_to_jsonl(corpus->corpus.vocab, rounds.back().labels);
    const std::string report = faithdec::report_to_json(rep).dump(2);
    emit(out_labels_jsonl, labels);
    emit(out_report_json, report);
    if (out_student != nullptr) *out_student = new fd_model{std::move(rounds.back().student)};
  });
}

fd_status fd_iterate(const fd_model* teacher, const fd_corpus* corpus, const char* config_json,
                     uint64_t seed, fd_model** out_student, char** out_report_json) {
  return guarded([&] {
    require(teacher, "teacher");
    require(corpus, "corpus");
    Json j = parse_config(config_json);
    const auto scorers = scorer_list(take(j, "scorers"));
    const auto eval_split = take(j, "eval_split", "test").get<std::string>();
    auto cfg = faithdec::distill_config_from_json(j);
    cfg.decode.seed = seed;
    cfg.train.seed = seed;
    std::vector<faithdec::Scorer> sc;
    for (const auto& s : scorers) {
      sc.push_back(faithdec::make_scorer(s, corpus->corpus.vocab.eos_id()));
    }
    faithdec::validate(cfg.teacher, teacher->model.vocab_size());
    auto rounds = faithdec::iterative_distill(teacher->model, corpus->corpus, cfg, sc, eval_split);
    auto rep = faithdec::distill_report(rounds, scorers,
                                        labels_summary_config(cfg, scorers, eval_split, seed));
    emit(out_report_json, faithdec::report_to_json(rep).dump(2));
    if (out_student != nullptr) *out_student = new fd_model{std::move(rounds.back().student)};
  });
}

fd_status fd_fit_composite(const char* csv_text, char** out_json) {
  return guarded([&] {
    require(csv_text, "csv_text");
    require(out_json, "out_json");
    auto table = faithdec::parse_fit_csv(csv_text);
    auto c = faithdec::fit_composite(table.features, table.labels, table.names);
    Json j = faithdec::composite_to_json(c);
    j["mse"] = faithdec::composite_mse(c, table.features, table.labels, table.names);
    j["rows"] = table.labels.size();
    emit(out_json, j.dump(2));
  });
}

fd_status fd_run_experiment(const fd_model* model, const fd_corpus* corpus,
                            const char* config_json, uint64_t seed, char** out_report_json) {
  return guarded([&] {
    require(model, "model");
    require(corpus, "corpus");
    require(out_report_json, "out_report_json");
    auto cfg = experiment_config(parse_config(config_json), seed);
    auto rep = faithdec::run_experiment(model->model, corpus->corpus, cfg);
    emit(out_report_json, faithdec::report_to_json(rep).dump(2));
  });
}

fd_status fd_sweep(const fd_model* model, const fd_corpus* corpus, const char* config_json,
                   uint64_t seed, char** out_report_json) {
  return guarded([&] {
    require(model, "model");
    require(corpus, "corpus");
    require(out_report_json, "out_report_json");
    Json j = parse_config(config_json);
    const Json axis_v = take(j, "axis");
    if (axis_v.is_null()) throw faithdec::ConfigError("sweep needs an 'axis'");
    const auto axis = faithdec::parse_sweep_axis(axis_v.get<std::string>());
    const auto values = take(j, "values", Json::array()).get<std::vector<double>>();
    const Json base_v = take(j, "base");
    const bool tune = take(j, "tune", false).get<bool>();
    const auto base = base_v.is_null() ? faithdec::default_sweep_recipe(axis)
                                       : faithdec::recipe_from_json(base_v);
    auto cfg = experiment_config(j, seed);
    faithdec::Report rep;
    if (tune) {
      if (axis != faithdec::SweepAxis::kLookaheadWeight) {
        throw faithdec::ConfigError("'tune' applies to the lookahead_weight axis only");
      }
      rep = faithdec::tune_lookahead_weight(model->model, corpus->corpus, cfg, base, values)
                .report;
    } else {
      rep = faithdec::sweep(model->model, corpus->corpus, cfg, axis, base, values);
    }
    emit(out_report_json, faithdec::report_to_json(rep).dump(2));
  });
}

fd_status fd_profile(const fd_model* model, const fd_corpus* corpus, const char* config_json,
                     uint64_t seed, char** out_report_json) {
  return guarded([&] {
    require(model, "model");
    require(corpus, "corpus");
    require(out_report_json, "out_report_json");
    Json j = parse_config(config_json);
    const auto kind = take(j, "kind", "timing").get<std::string>();
    const auto split_name = take(j, "split", "test").get<std::string>();
    const auto limit = take(j, "limit", 0).get<std::size_t>();
    auto dcfg = faithdec::decode_config_from_json(take(j, "decode", Json::object()));
    dcfg.seed = seed;
    const auto& m = model->model;
    const auto& split = corpus->corpus.split(split_name);
    const std::size_t n = limit == 0 ? split.size() : std::min(limit, split.size());
    std::vector<faithdec::Document> docs;
    for (std::size_t i = 0; i < n; ++i) docs.push_back(split[i].source);

    faithdec::Report rep;
    if (kind == "timing") {
      const int repeats = take(j, "repeats", 3).get<int>();
      const Json recipes_v = take(j, "recipes", Json::array({"greedy"}));
      std::vector<faithdec::Recipe> recipes;
      for (const auto& r : recipes_v) recipes.push_back(faithdec::recipe_from_json(r));
      for (const auto& r : recipes) faithdec::validate(r, m.vocab_size());
      if (!j.empty()) throw faithdec::ConfigError("unknown profile field '" + j.begin().key() + "'");
      std::vector<faithdec::TimingResult> results;
      for (const auto& r : recipes) results.push_back(faithdec::timing(m, docs, r, dcfg, repeats));
      Json config{{"kind", kind}, {"split", split_name}, {"limit", limit},
                  {"repeats", repeats}, {"decode", faithdec::decode_config_to_json(dcfg)}};
      rep = faithdec::timing_report(results, config);
    } else if (kind == "max_top") {
      const auto sizes =
          take(j, "beam_sizes", Json::array({1, 2, 4, 8})).get<std::vector<int>>();
      const auto scorers = scorer_list(take(j, "scorers"));
      if (!j.empty()) throw faithdec::ConfigError("unknown profile field '" + j.begin().key() + "'");
      rep = faithdec::max_top_report(m, docs, sizes, scorers, dcfg);
    } else if (kind == "prefix") {
      const auto recipe = recipe_or_greedy(take(j, "recipe"));
      const auto index = take(j, "document", 0).get<std::size_t>();
      const auto scorers = scorer_list(take(j, "scorers"));
      if (!j.empty()) throw faithdec::ConfigError("unknown profile field '" + j.begin().key() + "'");
      if (index >= split.size()) throw faithdec::ConfigError("document index out of range");
      rep = faithdec::prefix_profile_report(m, corpus->corpus.vocab, split[index].source, recipe,
                                            scorers, dcfg);
    } else {
      throw faithdec::ConfigError("unknown profile kind '" + kind + "'");
    }
    emit(out_report_json, faithdec::report_to_json(rep).dump(2));
  });
}

fd_status fd_report_csv(const char* report_json, char** out_csv) {
  return guarded([&] {
    require(report_json, "report_json");
    require(out_csv, "out_csv");
    auto rep = faithdec::report_from_json(faithdec::parse_json(report_json, "report"));
    emit(out_csv, faithdec::report_to_csv(rep));
  });
}

}  // extern "C"
