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

#include "faithdec/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace faithdec {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeAbort("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw RuntimeAbort("write failed for '" + path.string() + "'");
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

namespace {

template <typename T>
T get(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(what + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(what + ": field '" + key + "': " + e.what());
  }
}

// Assigns j[key] to out when present.
template <typename T>
void maybe(const Json& j, const char* key, T& out, const std::string& what) {
  if (j.contains(key)) out = get<T>(j, key, what);
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(what + ": unknown field '" + key + "'");
  }
}

std::vector<double> doubles(const Json& j, const char* key, std::size_t n,
                            const std::string& what) {
  auto v = get<std::vector<double>>(j, key, what);
  if (v.size() != n) {
    throw ConfigError(what + ": '" + key + "' has " + std::to_string(v.size()) +
                      " entries, expected " + std::to_string(n));
  }
  return v;
}

template <typename F>
void for_each_line(const std::string& text, F&& f) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    f(line, lineno);
  }
}

}  // namespace

Json vocab_to_json(const Vocabulary& v) {
  return Json{{"tokens", v.tokens()}, {"bos_id", v.bos_id()}, {"eos_id", v.eos_id()}};
}

Vocabulary vocab_from_json(const Json& j) {
  const std::string what = "vocab";
  check_keys(j, {"tokens", "bos_id", "eos_id"}, what);
  try {
    return Vocabulary(get<std::vector<std::string>>(j, "tokens", what),
                      get<TokenId>(j, "bos_id", what), get<TokenId>(j, "eos_id", what));
  } catch (const UsageError& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

Json model_to_json(const LogLinearModel& m) {
  const auto& p = m.params();
  return Json{{"vocab_size", p.vocab_size},
              {"bias", p.bias},
              {"transition", p.transition},
              {"copy_gate", p.copy_gate}};
}

LogLinearModel model_from_json(const Json& j, const Vocabulary& vocab) {
  const std::string what = "model";
  check_keys(j, {"vocab_size", "bias", "transition", "copy_gate"}, what);
  const auto v = get<std::size_t>(j, "vocab_size", what);
  if (v != vocab.size()) {
    throw ConfigError("model vocab_size " + std::to_string(v) +
                      " does not match vocabulary size " + std::to_string(vocab.size()));
  }
  LogLinearParams p;
  p.vocab_size = v;
  p.bias = doubles(j, "bias", v, what);
  p.transition = doubles(j, "transition", v * v, what);
  p.copy_gate = doubles(j, "copy_gate", v, what);
  if (!p.all_finite()) throw ConfigError("model parameters must be finite");
  return LogLinearModel(std::move(p), vocab.bos_id(), vocab.eos_id());
}

Json composite_to_json(const CompositeMetric& c) {
  return Json{{"weights", c.weights}, {"intercept", c.intercept}};
}

CompositeMetric composite_from_json(const Json& j) {
  const std::string what = "composite";
  check_keys(j, {"weights", "intercept"}, what);
  CompositeMetric c;
  c.weights = get<std::map<std::string, double>>(j, "weights", what);
  c.intercept = get<double>(j, "intercept", what);
  for (const auto& [name, w] : c.weights) {
    if (!std::isfinite(w)) throw ConfigError("composite weight '" + name + "' is not finite");
  }
  return c;
}

FitTable parse_fit_csv(const std::string& text) {
  FitTable t;
  bool header = true;
  for_each_line(text, [&](const std::string& line, std::size_t lineno) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (header) {
      if (cells.size() < 2 || cells.back() != "label") {
        throw ConfigError("fitting CSV header must list metrics followed by 'label'");
      }
      t.names.assign(cells.begin(), cells.end() - 1);
      header = false;
      return;
    }
    if (cells.size() != t.names.size() + 1) {
      throw ConfigError("fitting CSV line " + std::to_string(lineno) + ": expected " +
                        std::to_string(t.names.size() + 1) + " cells");
    }
    std::vector<double> row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[i].size() || !std::isfinite(v)) {
        throw ConfigError("fitting CSV line " + std::to_string(lineno) + ": bad number '" +
                          cells[i] + "'");
      }
      if (i + 1 == cells.size()) {
        t.labels.push_back(v);
      } else {
        row.push_back(v);
      }
    }
    t.features.push_back(std::move(row));
  });
  if (header) throw ConfigError("fitting CSV is empty");
  return t;
}

Json tokens_to_json(const Vocabulary& v, std::span<const TokenId> tokens) {
  Json out = Json::array();
  for (TokenId t : tokens) out.push_back(v.token(t));
  return out;
}

TokenSeq tokens_from_json(const Vocabulary& v, const Json& j) {
  if (!j.is_array()) throw ConfigError("token list must be an array");
  TokenSeq out;
  out.reserve(j.size());
  for (const auto& t : j) {
    if (!t.is_string()) throw ConfigError("tokens must be strings");
    const auto& s = t.get_ref<const std::string&>();
    if (!v.contains(s)) throw ConfigError("unknown token '" + s + "'");
    out.push_back(v.id(s));
  }
  return out;
}

namespace {

// References and generations are stored without the closing EOS.
TokenSeq terminated(TokenSeq seq, TokenId eos) {
  if (seq.empty() || seq.back() != eos) seq.push_back(eos);
  return seq;
}

}  // namespace

std::string examples_to_jsonl(const Vocabulary& v, std::span<const Example> examples) {
  std::string out;
  for (const auto& ex : examples) {
    Json j{{"id", ex.source.id},
           {"source", tokens_to_json(v, ex.source.tokens)},
           {"reference", tokens_to_json(v, content(ex.reference, v.eos_id()))}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Example> examples_from_jsonl(const Vocabulary& v, const std::string& text) {
  std::vector<Example> out;
  std::set<std::string> ids;
  for_each_line(text, [&](const std::string& line, std::size_t lineno) {
    const std::string what = "corpus line " + std::to_string(lineno);
    Json j = parse_json(line, what);
    check_keys(j, {"id", "source", "reference"}, what);
    Example ex;
    ex.source.id = get<std::string>(j, "id", what);
    if (!ids.insert(ex.source.id).second) {
      throw ConfigError(what + ": duplicate id '" + ex.source.id + "'");
    }
    ex.source.tokens = tokens_from_json(v, j.at("source"));
    ex.reference = terminated(tokens_from_json(v, j.at("reference")), v.eos_id());
    validate(ex.source, v);
    out.push_back(std::move(ex));
  });
  return out;
}

void save_corpus(const Corpus& c, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "vocab.json", vocab_to_json(c.vocab).dump(2) + "\n");
  write_file(dir / "train.jsonl", examples_to_jsonl(c.vocab, c.train));
  write_file(dir / "dev.jsonl", examples_to_jsonl(c.vocab, c.dev));
  write_file(dir / "test.jsonl", examples_to_jsonl(c.vocab, c.test));
}

Corpus load_corpus(const fs::path& dir) {
  Corpus c{vocab_from_json(parse_json(read_file(dir / "vocab.json"), "vocab.json")), {}, {},
           {}};
  c.train = examples_from_jsonl(c.vocab, read_file(dir / "train.jsonl"));
  c.dev = examples_from_jsonl(c.vocab, read_file(dir / "dev.jsonl"));
  c.test = examples_from_jsonl(c.vocab, read_file(dir / "test.jsonl"));
  std::set<std::string> ids;
  for (const auto* split : {&c.train, &c.dev, &c.test}) {
    for (const auto& ex : *split) {
      if (!ids.insert(ex.source.id).second) {
        throw ConfigError("document id '" + ex.source.id + "' appears in two splits");
      }
    }
  }
  return c;
}

std::string pseudo_labels_to_jsonl(const Vocabulary& v,
                                   std::span<const PseudoLabeledExample> labels) {
  std::string out;
  for (const auto& ex : labels) {
    Json j{{"id", ex.source.id},
           {"source", tokens_to_json(v, ex.source.tokens)},
           {"reference", tokens_to_json(v, content(ex.reference, v.eos_id()))},
           {"generated", tokens_to_json(v, content(ex.generated, v.eos_id()))},
           {"teacher_strategy", ex.teacher_strategy},
           {"seed", ex.seed}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<PseudoLabeledExample> pseudo_labels_from_jsonl(const Vocabulary& v,
                                                           const std::string& text) {
  std::vector<PseudoLabeledExample> out;
  for_each_line(text, [&](const std::string& line, std::size_t lineno) {
    const std::string what = "pseudo-label line " + std::to_string(lineno);
    Json j = parse_json(line, what);
    check_keys(j, {"id", "source", "reference", "generated", "teacher_strategy", "seed"},
               what);
    PseudoLabeledExample ex;
    ex.source.id = get<std::string>(j, "id", what);
    ex.source.tokens = tokens_from_json(v, j.at("source"));
    ex.reference = terminated(tokens_from_json(v, j.at("reference")), v.eos_id());
    ex.generated = terminated(tokens_from_json(v, get<Json>(j, "generated", what)), v.eos_id());
    ex.teacher_strategy = get<std::string>(j, "teacher_strategy", what);
    ex.seed = get<std::uint64_t>(j, "seed", what);
    validate(ex.source, v);
    out.push_back(std::move(ex));
  });
  return out;
}

Json trace_to_json(const Vocabulary& v, const LookaheadTrace& trace) {
  Json out = Json::array();
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const auto& step = trace.steps[t];
    Json live = Json::array();
    for (const auto& p : step.live) live.push_back(tokens_to_json(v, p));
    Json pool = Json::array();
    for (std::size_t i = 0; i < step.pool.size(); ++i) {
      const auto& e = step.pool[i];
      Json entry{{"parent", e.parent},
                 {"token", v.token(e.token)},
                 {"logprob", e.logprob},
                 {"heuristic", e.heuristic},
                 {"selection", e.selection},
                 {"selected", e.selected}};
      if (i < step.rollouts.size()) {
        Json rs = Json::array();
        const auto& r = step.rollouts[i];
        for (std::size_t k = 0; k < r.completions.size(); ++k) {
          rs.push_back(Json{{"tokens", tokens_to_json(v, r.completions[k])},
                            {"score", r.scores[k]}});
        }
        entry["rollouts"] = std::move(rs);
      }
      pool.push_back(std::move(entry));
    }
    out.push_back(Json{{"step", t}, {"live", std::move(live)}, {"pool", std::move(pool)}});
  }
  return out;
}

std::string trace_to_jsonl(const Vocabulary& v, const LookaheadTrace& trace) {
  std::string out;
  for (const auto& step : trace_to_json(v, trace)) {
    out += step.dump();
    out += '\n';
  }
  return out;
}

CorpusConfig corpus_config_from_json(const Json& j) {
  const std::string what = "corpus config";
  check_keys(j,
             {"vocab_size", "num_docs", "source_len", "summary_len", "hallucination_rate",
              "successor_affinity", "seed", "train_fraction", "dev_fraction"},
             what);
  CorpusConfig c;
  maybe(j, "vocab_size", c.vocab_size, what);
  maybe(j, "num_docs", c.num_docs, what);
  for (auto [key, range] : {std::pair{"source_len", &c.source_len},
                            std::pair{"summary_len", &c.summary_len}}) {
    if (!j.contains(key)) continue;
    auto r = get<std::vector<int>>(j, key, what);
    if (r.size() != 2) throw ConfigError(what + ": '" + key + "' must be [min, max]");
    *range = {r[0], r[1]};
  }
  maybe(j, "hallucination_rate", c.hallucination_rate, what);
  maybe(j, "successor_affinity", c.successor_affinity, what);
  maybe(j, "seed", c.seed, what);
  maybe(j, "train_fraction", c.train_fraction, what);
  maybe(j, "dev_fraction", c.dev_fraction, what);
  validate(c);
  return c;
}

Json corpus_config_to_json(const CorpusConfig& c) {
  return Json{{"vocab_size", c.vocab_size},
              {"num_docs", c.num_docs},
              {"source_len", {c.source_len.min, c.source_len.max}},
              {"summary_len", {c.summary_len.min, c.summary_len.max}},
              {"hallucination_rate", c.hallucination_rate},
              {"successor_affinity", c.successor_affinity},
              {"seed", c.seed},
              {"train_fraction", c.train_fraction},
              {"dev_fraction", c.dev_fraction}};
}

TrainConfig train_config_from_json(const Json& j) {
  const std::string what = "train config";
  check_keys(j, {"learning_rate", "epochs", "batch_size", "seed", "l2", "schedule"}, what);
  TrainConfig c;
  maybe(j, "learning_rate", c.learning_rate, what);
  maybe(j, "epochs", c.epochs, what);
  maybe(j, "batch_size", c.batch_size, what);
  maybe(j, "seed", c.seed, what);
  maybe(j, "l2", c.l2, what);
  if (j.contains("schedule")) {
    const auto name = get<std::string>(j, "schedule", what);
    if (name == "constant") {
      c.schedule = LrSchedule::kConstant;
    } else if (name == "linear") {
      c.schedule = LrSchedule::kLinear;
    } else {
      throw ConfigError(what + ": schedule must be \"constant\" or \"linear\"");
    }
  }
  validate(c);
  return c;
}

Json train_config_to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"l2", c.l2},
              {"schedule", c.schedule == LrSchedule::kConstant ? "constant" : "linear"}};
}

DecodeConfig decode_config_from_json(const Json& j) {
  const std::string what = "decode config";
  check_keys(j, {"max_length", "length_penalty", "seed"}, what);
  DecodeConfig c;
  maybe(j, "max_length", c.max_length, what);
  maybe(j, "length_penalty", c.length_penalty, what);
  maybe(j, "seed", c.seed, what);
  validate(c);
  return c;
}

Json decode_config_to_json(const DecodeConfig& c) {
  return Json{{"max_length", c.max_length},
              {"length_penalty", c.length_penalty},
              {"seed", c.seed}};
}

Recipe recipe_from_json(const Json& j) {
  const std::string what = "recipe";
  if (j.is_string()) return recipe_from_json(Json{{"name", j}});
  check_keys(j,
             {"name", "beam", "top_p", "rank_scorer", "weight", "candidate_cap", "scorer",
              "rollout", "rollout_beam", "rollout_length"},
             what);
  Recipe r;
  r.kind = parse_recipe_kind(get<std::string>(j, "name", what));
  maybe(j, "beam", r.beam_width, what);
  maybe(j, "top_p", r.top_p, what);
  maybe(j, "rank_scorer", r.rank_scorer, what);
  maybe(j, "weight", r.lookahead.weight, what);
  maybe(j, "candidate_cap", r.lookahead.candidate_cap, what);
  maybe(j, "scorer", r.lookahead.scorer, what);
  if (j.contains("rollout")) {
    const auto kind = get<std::string>(j, "rollout", what);
    if (kind == "greedy") {
      r.lookahead.rollout.kind = RolloutKind::kGreedy;
    } else if (kind == "sampling") {
      r.lookahead.rollout.kind = RolloutKind::kSampling;
    } else if (kind == "beam") {
      r.lookahead.rollout.kind = RolloutKind::kBeam;
    } else {
      throw ConfigError(what + ": unknown rollout strategy '" + kind + "'");
    }
  }
  maybe(j, "rollout_beam", r.lookahead.rollout.beam_width, what);
  if (j.contains("rollout_length")) {
    const auto& l = j.at("rollout_length");
    if (l.is_string() && l.get<std::string>() == "full") {
      r.lookahead.rollout_length.reset();
    } else {
      r.lookahead.rollout_length = get<int>(j, "rollout_length", what);
    }
  }
  return r;
}

Json recipe_to_json(const Recipe& r) {
  Json j{{"name", recipe_kind_name(r.kind)},
         {"beam", r.beam_width},
         {"top_p", r.top_p},
         {"rank_scorer", r.rank_scorer},
         {"weight", r.lookahead.weight},
         {"candidate_cap", r.lookahead.candidate_cap},
         {"scorer", r.lookahead.scorer},
         {"rollout_beam", r.lookahead.rollout.beam_width}};
  switch (r.lookahead.rollout.kind) {
    case RolloutKind::kGreedy:
      j["rollout"] = "greedy";
      break;
    case RolloutKind::kSampling:
      j["rollout"] = "sampling";
      break;
    case RolloutKind::kBeam:
      j["rollout"] = "beam";
      break;
  }
  if (r.lookahead.rollout_length) {
    j["rollout_length"] = *r.lookahead.rollout_length;
  } else {
    j["rollout_length"] = "full";
  }
  return j;
}

DistillConfig distill_config_from_json(const Json& j) {
  const std::string what = "distill config";
  check_keys(j,
             {"lambda", "teacher", "iterations", "train", "decode", "label_fraction",
              "student_seed", "init_scale"},
             what);
  DistillConfig c;
  maybe(j, "lambda", c.lambda, what);
  if (j.contains("teacher")) c.teacher = recipe_from_json(j.at("teacher"));
  maybe(j, "iterations", c.iterations, what);
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("decode")) c.decode = decode_config_from_json(j.at("decode"));
  maybe(j, "label_fraction", c.label_fraction, what);
  maybe(j, "student_seed", c.student_seed, what);
  maybe(j, "init_scale", c.init_scale, what);
  validate(c);
  return c;
}

Json distill_config_to_json(const DistillConfig& c) {
  return Json{{"lambda", c.lambda},
              {"teacher", recipe_to_json(c.teacher)},
              {"iterations", c.iterations},
              {"train", train_config_to_json(c.train)},
              {"decode", decode_config_to_json(c.decode)},
              {"label_fraction", c.label_fraction},
              {"student_seed", c.student_seed},
              {"init_scale", c.init_scale}};
}

}  // namespace faithdec
