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

// Command-line front end. Talks to the library through the C API only.
//
// Every subcommand reads an optional JSON config (--config) and requires a
// seed (--seed, or "seed" in the config). Flags override config fields.
// Exit codes: 0 success, 2 configuration error, 3 runtime abort.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "faithdec/faithdec.h"

namespace {

using Json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void config_error(const std::string& message) {
  throw CliError{kExitConfig, message};
}

void check(fd_status s) {
  if (s == FD_OK) return;
  const int code = s == FD_ERR_RUNTIME ? kExitRuntime : kExitConfig;
  throw CliError{code, fd_last_error()};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError{kExitRuntime, "cannot write '" + path + "'"};
  out << text;
  if (!out) throw CliError{kExitRuntime, "write failed for '" + path + "'"};
}

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { fd_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

using CorpusPtr = std::unique_ptr<fd_corpus, decltype(&fd_corpus_free)>;
using ModelPtr = std::unique_ptr<fd_model, decltype(&fd_model_free)>;

// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string corpus;
  std::string model;
  std::string out;

  Json config = Json::object();

  void load() {
    if (!config_path.empty()) {
      try {
        config = Json::parse(read_text(config_path));
      } catch (const Json::exception& e) {
        config_error("config '" + config_path + "': " + e.what());
      }
      if (!config.is_object()) config_error("config must be a JSON object");
    }
    // Paths may come from the config; flags win.
    for (auto [key, field] : {std::pair{"corpus", &corpus}, std::pair{"model", &model},
                              std::pair{"out", &out}}) {
      if (config.contains(key)) {
        if (field->empty()) *field = config[key].get<std::string>();
        config.erase(key);
      }
    }
    if (seed_opt->count() == 0) {
      if (!config.contains("seed")) config_error("no seed given (use --seed); refusing to run");
      seed = config["seed"].get<std::uint64_t>();
    }
    config.erase("seed");
  }

  const std::string& need(const std::string& value, const char* what) const {
    if (value.empty()) config_error(std::string("missing --") + what);
    return value;
  }

  CorpusPtr open_corpus() const {
    fd_corpus* c = nullptr;
    check(fd_corpus_load(need(corpus, "corpus").c_str(), &c));
    return CorpusPtr(c, fd_corpus_free);
  }

  ModelPtr open_model(const fd_corpus* c) const {
    fd_model* m = nullptr;
    check(fd_model_load(c, need(model, "model").c_str(), &m));
    return ModelPtr(m, fd_model_free);
  }
};

Common* add_common(CLI::App* sub, std::vector<std::unique_ptr<Common>>& store) {
  store.push_back(std::make_unique<Common>());
  Common* c = store.back().get();
  sub->add_option("--config", c->config_path, "JSON config file");
  c->seed_opt = sub->add_option("--seed", c->seed, "Run seed (required)");
  return c;
}

template <typename T>
void set_if(Json& j, const std::string& key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

Json& recipe_object(Json& config, const char* key, const std::string& default_name) {
  if (!config.contains(key) || config[key].is_null()) {
    config[key] = Json{{"name", default_name}};
  } else if (config[key].is_string()) {
    config[key] = Json{{"name", config[key]}};
  }
  return config[key];
}

struct RecipeFlags {
  std::optional<std::string> name;
  std::optional<int> beam;
  std::optional<double> top_p;
  std::optional<std::string> rank_scorer;
  std::optional<double> weight;
  std::optional<int> candidate_cap;
  std::optional<std::string> scorer;
  std::optional<std::string> rollout;
  std::optional<int> rollout_length;

  void add(CLI::App* sub) {
    sub->add_option("--recipe", name, "Decoding recipe name");
    sub->add_option("--beam", beam, "Beam width");
    sub->add_option("--top-p", top_p, "Nucleus threshold");
    sub->add_option("--rank-scorer", rank_scorer, "Scorer used for re-ranking");
    sub->add_option("--weight", weight, "Lookahead weight w");
    sub->add_option("--candidate-cap", candidate_cap, "Lookahead candidate cap c");
    sub->add_option("--scorer", scorer, "Lookahead heuristic scorer");
    sub->add_option("--rollout", rollout, "Rollout strategy: greedy, sampling, beam");
    sub->add_option("--rollout-length", rollout_length, "Rollout length (default: full)");
  }

  void apply(Json& r) const {
    set_if(r, "name", name);
    set_if(r, "beam", beam);
    set_if(r, "top_p", top_p);
    set_if(r, "rank_scorer", rank_scorer);
    set_if(r, "weight", weight);
    set_if(r, "candidate_cap", candidate_cap);
    set_if(r, "scorer", scorer);
    set_if(r, "rollout", rollout);
    set_if(r, "rollout_length", rollout_length);
  }
};

struct SplitFlags {
  std::optional<std::string> split;
  std::optional<std::size_t> limit;
  std::optional<int> max_length;
  std::optional<double> length_penalty;

  void add(CLI::App* sub) {
    sub->add_option("--split", split, "Corpus split: train, dev, test");
    sub->add_option("--limit", limit, "Decode only the first N documents");
    sub->add_option("--max-length", max_length, "Maximum summary length");
    sub->add_option("--length-penalty", length_penalty, "Length penalty exponent");
  }

  void apply(Json& j) const {
    set_if(j, "split", split);
    set_if(j, "limit", limit);
    if (max_length || length_penalty) {
      Json& d = j["decode"];
      if (d.is_null()) d = Json::object();
      set_if(d, "max_length", max_length);
      set_if(d, "length_penalty", length_penalty);
    }
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_report(const std::string& stem, const std::string& report_json) {
  OwnedString csv;
  check(fd_report_csv(report_json.c_str(), &csv.p));
  write_text(stem + ".json", report_json + "\n");
  write_text(stem + ".csv", csv.str());
  std::cout << csv.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"faithdec: faithfulness-aware decoding experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fd_version()));
  std::vector<std::unique_ptr<Common>> commons;
  std::function<void()> run;

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus directory");
  Common* gen_c = add_common(gen, commons);
  gen->add_option("--out", gen_c->out, "Output directory");
  std::optional<int> gen_docs, gen_vocab;
  std::optional<double> gen_hall;
  gen->add_option("--num-docs", gen_docs, "Documents across all splits");
  gen->add_option("--vocab-size", gen_vocab, "Vocabulary size");
  gen->add_option("--hallucination-rate", gen_hall, "Reference corruption rate");
  gen->callback([&] {
    run = [&] {
      gen_c->load();
      set_if(gen_c->config, "num_docs", gen_docs);
      set_if(gen_c->config, "vocab_size", gen_vocab);
      set_if(gen_c->config, "hallucination_rate", gen_hall);
      fd_corpus* c = nullptr;
      check(fd_corpus_generate(gen_c->config.dump().c_str(), gen_c->seed, &c));
      CorpusPtr corpus(c, fd_corpus_free);
      check(fd_corpus_save(corpus.get(), gen_c->need(gen_c->out, "out").c_str()));
      OwnedString info;
      check(fd_corpus_describe(corpus.get(), &info.p));
      std::cout << info.str() << "\n";
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Train the baseline model on references");
  Common* train_c = add_common(train, commons);
  train->add_option("--corpus", train_c->corpus, "Corpus directory");
  train->add_option("--out", train_c->out, "Output model JSON");
  std::optional<int> train_epochs;
  std::optional<double> train_lr;
  train->add_option("--epochs", train_epochs, "Training epochs");
  train->add_option("--lr", train_lr, "Learning rate");
  train->callback([&] {
    run = [&] {
      train_c->load();
      set_if(train_c->config, "epochs", train_epochs);
      set_if(train_c->config, "learning_rate", train_lr);
      auto corpus = train_c->open_corpus();
      fd_model* m = nullptr;
      OwnedString log;
      check(fd_model_train(corpus.get(), train_c->config.dump().c_str(), train_c->seed, &m,
                           &log.p));
      ModelPtr model(m, fd_model_free);
      check(fd_model_save(model.get(), train_c->need(train_c->out, "out").c_str()));
      std::cout << log.str() << "\n";
    };
  });

  // decode, rank, lookahead share one implementation with different defaults.
  struct DecodeCmd {
    const char* default_recipe = "greedy";
    Common* common = nullptr;
    RecipeFlags recipe;
    SplitFlags split;
    bool trace = false;
    std::string scorers;
  };
  std::vector<std::unique_ptr<DecodeCmd>> decode_cmds;
  for (auto [name, help, def] :
       {std::tuple{"decode", "Decode a split with any recipe", "greedy"},
        std::tuple{"rank", "Beam search plus metric re-ranking", "beam+ranking"},
        std::tuple{"lookahead", "Lookahead decoding with optional traces", "beam+lookahead"}}) {
    decode_cmds.push_back(std::make_unique<DecodeCmd>());
    DecodeCmd* cmd = decode_cmds.back().get();
    cmd->default_recipe = def;
    auto* sub = app.add_subcommand(name, help);
    cmd->common = add_common(sub, commons);
    sub->add_option("--corpus", cmd->common->corpus, "Corpus directory");
    sub->add_option("--model", cmd->common->model, "Model JSON");
    sub->add_option("--out", cmd->common->out, "Output stem (.jsonl, .csv, .json)");
    sub->add_option("--scorers", cmd->scorers, "Comma-separated scorer names");
    sub->add_flag("--trace", cmd->trace, "Include per-step lookahead traces");
    cmd->recipe.add(sub);
    cmd->split.add(sub);
    sub->callback([&run, cmd] {
      run = [cmd] {
        Common& c = *cmd->common;
        c.load();
        cmd->recipe.apply(recipe_object(c.config, "recipe", cmd->default_recipe));
        cmd->split.apply(c.config);
        if (!cmd->scorers.empty()) c.config["scorers"] = split_list(cmd->scorers);
        if (cmd->trace) c.config["trace"] = true;
        auto corpus = c.open_corpus();
        auto model = c.open_model(corpus.get());
        OwnedString lines, report;
        check(fd_decode(model.get(), corpus.get(), c.config.dump().c_str(), c.seed, &lines.p,
                        &report.p));
        const std::string& stem = c.need(c.out, "out");
        write_text(stem + ".jsonl", lines.str());
        write_report(stem, report.str());
      };
    });
  }

  // distill, iterate
  struct DistillCmd {
    Common* common = nullptr;
    RecipeFlags teacher;
    std::optional<double> lambda;
    std::optional<int> iterations;
    std::optional<int> epochs;
  };
  DistillCmd dist_cmd, iter_cmd;
  for (auto [name, help, cmd] :
       {std::tuple{"distill", "One round of decoding distillation", &dist_cmd},
        std::tuple{"iterate", "Iterative distillation", &iter_cmd}}) {
    auto* sub = app.add_subcommand(name, help);
    cmd->common = add_common(sub, commons);
    sub->add_option("--corpus", cmd->common->corpus, "Corpus directory");
    sub->add_option("--model", cmd->common->model, "Teacher model JSON");
    sub->add_option("--out", cmd->common->out, "Output stem");
    sub->add_option("--lambda", cmd->lambda, "Weight of the pseudo-label loss");
    sub->add_option("--epochs", cmd->epochs, "Student training epochs");
    if (cmd == &iter_cmd) sub->add_option("--iterations", cmd->iterations, "Rounds");
    cmd->teacher.add(sub);
    const bool iterative = cmd == &iter_cmd;
    sub->callback([&run, cmd, iterative] {
      run = [cmd, iterative] {
        Common& c = *cmd->common;
        c.load();
        set_if(c.config, "lambda", cmd->lambda);
        set_if(c.config, "iterations", cmd->iterations);
        if (cmd->epochs) c.config["train"]["epochs"] = *cmd->epochs;
        cmd->teacher.apply(recipe_object(c.config, "teacher", "beam+lookahead+ranking"));
        auto corpus = c.open_corpus();
        auto teacher = c.open_model(corpus.get());
        const std::string& stem = c.need(c.out, "out");
        fd_model* s = nullptr;
        OwnedString labels, report;
        if (iterative) {
          check(fd_iterate(teacher.get(), corpus.get(), c.config.dump().c_str(), c.seed, &s,
                           &report.p));
        } else {
          check(fd_distill(teacher.get(), corpus.get(), c.config.dump().c_str(), c.seed, &s,
                           &labels.p, &report.p));
          write_text(stem + ".labels.jsonl", labels.str());
        }
        ModelPtr student(s, fd_model_free);
        check(fd_model_save(student.get(), (stem + ".model.json").c_str()));
        write_report(stem, report.str());
      };
    });
  }

  // fit-composite
  auto* fit = app.add_subcommand("fit-composite", "Fit composite metric weights from CSV");
  Common* fit_c = add_common(fit, commons);
  std::string fit_data;
  fit->add_option("--data", fit_data, "CSV: metric columns then 'label'");
  fit->add_option("--out", fit_c->out, "Output composite JSON");
  fit->callback([&] {
    run = [&] {
      fit_c->load();
      if (fit_data.empty() && fit_c->config.contains("data")) {
        fit_data = fit_c->config["data"].get<std::string>();
      }
      fit_c->config.erase("data");
      if (!fit_c->config.empty()) config_error("unknown field '" + fit_c->config.begin().key() + "'");
      OwnedString result;
      check(fd_fit_composite(read_text(fit_c->need(fit_data, "data")).c_str(), &result.p));
      Json j = Json::parse(result.str());
      j["seed"] = fit_c->seed;
      write_text(fit_c->need(fit_c->out, "out"),
                 Json{{"weights", j["weights"]}, {"intercept", j["intercept"]}}.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
    };
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "Sweep one decoding parameter");
  Common* sw_c = add_common(sw, commons);
  sw->add_option("--corpus", sw_c->corpus, "Corpus directory");
  sw->add_option("--model", sw_c->model, "Model JSON");
  sw->add_option("--out", sw_c->out, "Output stem");
  std::optional<std::string> sw_axis, sw_values;
  bool sw_tune = false;
  SplitFlags sw_split;
  sw->add_option("--axis", sw_axis, "beam_size, top_p, lookahead_weight or alpha");
  sw->add_option("--values", sw_values, "Comma-separated values");
  sw->add_flag("--tune", sw_tune, "Grid-search the lookahead weight on the dev split");
  sw_split.add(sw);
  sw->callback([&] {
    run = [&] {
      sw_c->load();
      set_if(sw_c->config, "axis", sw_axis);
      if (sw_values) {
        std::vector<double> vals;
        for (const auto& v : split_list(*sw_values)) {
          try {
            vals.push_back(std::stod(v));
          } catch (const std::exception&) {
            config_error("bad sweep value '" + v + "'");
          }
        }
        sw_c->config["values"] = vals;
      }
      if (sw_tune) sw_c->config["tune"] = true;
      sw_split.apply(sw_c->config);
      auto corpus = sw_c->open_corpus();
      auto model = sw_c->open_model(corpus.get());
      OwnedString report;
      check(fd_sweep(model.get(), corpus.get(), sw_c->config.dump().c_str(), sw_c->seed,
                     &report.p));
      write_report(sw_c->need(sw_c->out, "out"), report.str());
    };
  });

  // profile
  auto* prof = app.add_subcommand("profile", "Timing, max/top and prefix-rollout profiles");
  Common* prof_c = add_common(prof, commons);
  prof->add_option("--corpus", prof_c->corpus, "Corpus directory");
  prof->add_option("--model", prof_c->model, "Model JSON");
  prof->add_option("--out", prof_c->out, "Output stem");
  std::optional<std::string> prof_kind, prof_recipes;
  std::optional<int> prof_repeats;
  std::optional<std::size_t> prof_doc;
  SplitFlags prof_split;
  prof->add_option("--kind", prof_kind, "timing, max_top or prefix");
  prof->add_option("--recipes", prof_recipes, "Comma-separated recipe names (timing)");
  prof->add_option("--repeats", prof_repeats, "Timing repeats (>= 3)");
  prof->add_option("--document", prof_doc, "Document index (prefix)");
  prof_split.add(prof);
  prof->callback([&] {
    run = [&] {
      prof_c->load();
      set_if(prof_c->config, "kind", prof_kind);
      set_if(prof_c->config, "repeats", prof_repeats);
      set_if(prof_c->config, "document", prof_doc);
      if (prof_recipes) prof_c->config["recipes"] = split_list(*prof_recipes);
      prof_split.apply(prof_c->config);
      auto corpus = prof_c->open_corpus();
      auto model = prof_c->open_model(corpus.get());
      OwnedString report;
      check(fd_profile(model.get(), corpus.get(), prof_c->config.dump().c_str(), prof_c->seed,
                       &report.p));
      write_report(prof_c->need(prof_c->out, "out"), report.str());
    };
  });

  // report
  auto* rep = app.add_subcommand("report", "Run the recipe comparison and write the report");
  Common* rep_c = add_common(rep, commons);
  rep->add_option("--corpus", rep_c->corpus, "Corpus directory");
  rep->add_option("--model", rep_c->model, "Model JSON");
  rep->add_option("--out", rep_c->out, "Output stem");
  std::optional<std::string> rep_recipes, rep_scorers;
  SplitFlags rep_split;
  rep->add_option("--recipes", rep_recipes, "Comma-separated recipe names");
  rep->add_option("--scorers", rep_scorers, "Comma-separated scorer names");
  rep_split.add(rep);
  rep->callback([&] {
    run = [&] {
      rep_c->load();
      if (rep_recipes) rep_c->config["recipes"] = split_list(*rep_recipes);
      if (!rep_c->config.contains("recipes")) {
        rep_c->config["recipes"] = {"greedy",         "beam",           "nucleus",
                                    "beam+ranking",   "beam+lookahead", "beam+lookahead+ranking"};
      }
      if (rep_scorers) rep_c->config["scorers"] = split_list(*rep_scorers);
      rep_split.apply(rep_c->config);
      auto corpus = rep_c->open_corpus();
      auto model = rep_c->open_model(corpus.get());
      OwnedString report;
      check(fd_run_experiment(model.get(), corpus.get(), rep_c->config.dump().c_str(),
                              rep_c->seed, &report.p));
      write_report(rep_c->need(rep_c->out, "out"), report.str());
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    run();
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
