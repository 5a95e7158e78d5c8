// Copyright 2026 The slimdex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// slimdex command-line driver.
//
// Exit codes: 0 success, 1 usage error, 2 data/format/parameter error.
// Every subcommand echoes its resolved configuration as one JSON line on
// stdout before doing any work; diagnostics go to stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slimdex/slimdex.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slimdex;

namespace {

int g_verbose = 0;

void log(const std::string& msg) {
  if (g_verbose > 0) std::cerr << "[slimdex] " << msg << '\n';
}

void echo(const std::string& command, json config) {
  config["command"] = command;
  std::cout << config.dump() << std::endl;
}

std::optional<std::size_t> opt_size(std::size_t v) {
  return v == 0 ? std::nullopt : std::optional<std::size_t>(v);
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream in(io::read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string id_list_text(std::span<const std::string> ids) {
  std::string out;
  for (const auto& id : ids) out += id + '\n';
  return out;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  SyntheticSpec spec;
  std::size_t positives_k = 10;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  echo("synth", {{"n", a.spec.n},
                 {"d", a.spec.d},
                 {"clusters", a.spec.n_clusters},
                 {"noise", a.spec.noise_sigma},
                 {"queries", a.spec.n_queries},
                 {"answer_fraction", a.spec.answer_fraction},
                 {"title_noise", a.spec.title_noise},
                 {"positives_k", a.positives_k},
                 {"seed", a.spec.seed},
                 {"out", a.out}});
  const auto corpus = generate_synthetic(a.spec);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_embeddings(corpus.passage_vectors, dir / "passages.emb");
  save_embeddings(corpus.query_vectors, dir / "queries.emb");
  io::write_file_atomic(dir / "passages.jsonl", passages_to_jsonl(corpus.passages));
  io::write_file_atomic(dir / "queries.jsonl", queries_to_jsonl(corpus.queries));
  io::write_file_atomic(dir / "ground_truth.jsonl", ground_truth_to_jsonl(corpus.ground_truth));

  // Filter positives: articles whose exactly-retrieved passages hold the answer.
  const auto results = exact_retrieve_all(corpus.passage_vectors, corpus.query_vectors, a.positives_k);
  const auto positives = answer_bearing_articles(results, corpus.queries, PassageTexts(corpus.passages));
  const std::vector<std::string> pos(positives.begin(), positives.end());
  io::write_file_atomic(dir / "positives.txt", id_list_text(pos));
  log("wrote " + std::to_string(corpus.passages.size()) + " passages, " + std::to_string(corpus.queries.size()) +
      " queries, " + std::to_string(pos.size()) + " positive articles to " + dir.string());
}

// ---------------------------------------------------------------------------

struct BuildArgs {
  std::string embeddings;
  std::string mode = "flat32";
  std::size_t d_r = 0;
  std::size_t n_v = 0;
  std::size_t n_b = 0;
  bool normalize = false;
  std::uint64_t seed = 0;
  std::string out;
};

void run_build(const BuildArgs& a) {
  IndexConfig c;
  c.mode = parse_storage_mode(a.mode);
  c.d_r = opt_size(a.d_r);
  c.n_v = a.n_v;
  c.n_b = a.n_b;
  c.normalize = a.normalize;
  c.seed = a.seed;
  json cfg = c.to_json();
  cfg["embeddings"] = a.embeddings;
  cfg["out"] = a.out;
  echo("build", cfg);
  const auto X = load_embeddings(a.embeddings);
  c.validate(X.d);
  const auto ix = build_index(X, c);
  save_index(ix, a.out);
  log("index " + a.out + ": " + ix.size_report().to_json().dump());
}

// ---------------------------------------------------------------------------

struct SearchArgs {
  std::string index;
  std::string queries;
  std::string query_vectors;
  std::size_t k = 10;
  std::string out;
};

void run_search(const SearchArgs& a) {
  echo("search", {{"index", a.index}, {"queries", a.queries}, {"query_vectors", a.query_vectors}, {"k", a.k},
                  {"out", a.out}});
  if (a.k == 0) throw InvalidArgument("--k must be >= 1");
  const auto ix = load_index(a.index);
  const auto queries = load_queries(a.queries);
  const auto aligned = align_query_vectors(load_embeddings(a.query_vectors), queries);
  std::string out;
  for (std::size_t i = 0; i < aligned.n; ++i) {
    const auto r = ix.search(aligned.row(i), a.k);
    nlohmann::ordered_json line;
    line["query_id"] = aligned.ids[i];
    line["ids"] = nlohmann::ordered_json::array();
    line["scores"] = nlohmann::ordered_json::array();
    for (const auto& e : r) {
      line["ids"].push_back(e.id);
      line["scores"].push_back(e.score);
    }
    out += line.dump() + '\n';
  }
  io::write_file_atomic(a.out, out);
  log("searched " + std::to_string(aligned.n) + " queries");
}

// ---------------------------------------------------------------------------

struct FilterTrainArgs {
  std::string passages;
  std::string positives;
  std::size_t rounds = 3;
  std::size_t negatives = 1000;
  std::size_t hash_dim = kDefaultHashDim;
  std::uint64_t hash_seed = 0;
  double l2 = LogRegHyper{}.l2;
  std::size_t epochs = LogRegHyper{}.epochs;
  std::uint64_t seed = 0;
  std::string out;
};

void run_filter_train(const FilterTrainArgs& a) {
  echo("filter-train", {{"passages", a.passages}, {"positives", a.positives}, {"rounds", a.rounds},
                        {"negatives", a.negatives}, {"hash_dim", a.hash_dim}, {"hash_seed", a.hash_seed},
                        {"l2", a.l2}, {"epochs", a.epochs}, {"seed", a.seed}, {"out", a.out}});
  const auto passages = load_passages(a.passages);
  const auto ids = read_id_list(a.positives);
  const std::set<std::string> positives(ids.begin(), ids.end());
  const auto articles = article_features(passages, a.hash_dim, a.hash_seed);
  SelfTrainOptions o;
  o.rounds = a.rounds;
  o.negatives_per_round = a.negatives;
  o.seed = a.seed;
  o.hyper.l2 = a.l2;
  o.hyper.epochs = a.epochs;
  const auto model = self_train(articles, positives, o, a.hash_dim, a.hash_seed);
  save_filter_model(model, a.out);
  log("trained on " + std::to_string(positives.size()) + " positives over " + std::to_string(articles.size()) +
      " articles");
}

// ---------------------------------------------------------------------------

struct FilterApplyArgs {
  std::string model;
  std::string passages;
  std::string embeddings;
  std::size_t keep_count = 0;
  double keep_fraction = -1.0;
  std::string ranking_out;
  std::string out;
};

std::vector<std::string> rank_articles(const FilterModel& model, std::span<const PassageRecord> passages) {
  const auto articles = article_features(passages, model.hash_dim, model.hash_seed);
  return filter_corpus(model, articles, articles.size());
}

void run_filter_apply(const FilterApplyArgs& a) {
  echo("filter-apply", {{"model", a.model}, {"passages", a.passages}, {"embeddings", a.embeddings},
                        {"keep_count", a.keep_count}, {"keep_fraction", a.keep_fraction},
                        {"ranking_out", a.ranking_out}, {"out", a.out}});
  const auto model = load_filter_model(a.model);
  const auto passages = load_passages(a.passages);
  const auto X = load_embeddings(a.embeddings);
  const auto ranking = rank_articles(model, passages);
  EmbeddingMatrix kept;
  if (a.keep_fraction >= 0.0) {
    kept = keep_top_articles(X, passages, ranking, a.keep_fraction);
  } else {
    if (a.keep_count > ranking.size()) {
      throw InvalidArgument("--keep-count " + std::to_string(a.keep_count) + " exceeds " +
                            std::to_string(ranking.size()) + " articles");
    }
    kept = select_rows(X, passages_of_articles(passages, std::span(ranking).first(a.keep_count)));
  }
  save_embeddings(kept, a.out);
  if (!a.ranking_out.empty()) io::write_file_atomic(a.ranking_out, id_list_text(ranking));
  log("kept " + std::to_string(kept.n) + " of " + std::to_string(X.n) + " passages");
}

// ---------------------------------------------------------------------------

struct EvalInputs {
  std::string passages;
  std::string queries;
  std::string query_vectors;
};

struct EvalArgs {
  std::string index;
  std::string embeddings;
  EvalInputs in;
  std::string out;
};

void run_eval(const EvalArgs& a) {
  echo("eval", {{"index", a.index}, {"embeddings", a.embeddings}, {"passages", a.in.passages},
                {"queries", a.in.queries}, {"query_vectors", a.in.query_vectors}, {"out", a.out}});
  const auto ix = load_index(a.index);
  const auto stored = load_embeddings(a.embeddings);
  if (stored.ids != ix.ids()) throw InvalidArgument("--embeddings rows do not match the index passages");
  const auto passages = load_passages(a.in.passages);
  const auto queries = load_queries(a.in.queries);
  const auto qv = load_embeddings(a.in.query_vectors);
  SweepRow row = row_for_index(ix);
  measure_index(ix, stored, passages, qv, queries, row);
  const std::vector<SweepRow> rows = {row};
  const auto csv = sweep_to_csv(rows);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    io::write_file_atomic(a.out, csv);
  }
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string embeddings;
  EvalInputs in;
  std::vector<std::size_t> d_r;
  std::vector<std::size_t> bits = {1, 2, 8, 16, 32};
  std::size_t code_bits = 8;
  std::vector<double> keep = {1.0};
  std::string filter_model;
  bool timing = false;
  std::size_t max_training_points = PQTrainOptions{}.max_training_points;
  std::uint64_t seed = 0;
  std::string out;
};

void run_sweep_cmd(const SweepArgs& a) {
  echo("sweep", {{"embeddings", a.embeddings}, {"passages", a.in.passages}, {"queries", a.in.queries},
                 {"query_vectors", a.in.query_vectors}, {"d_r", a.d_r}, {"bits", a.bits},
                 {"code_bits", a.code_bits}, {"keep", a.keep}, {"filter_model", a.filter_model},
                 {"timing", a.timing}, {"max_training_points", a.max_training_points}, {"seed", a.seed},
                 {"out", a.out}});
  const auto P = load_embeddings(a.embeddings);
  const auto passages = load_passages(a.in.passages);
  const auto queries = load_queries(a.in.queries);
  const auto qv = load_embeddings(a.in.query_vectors);

  const bool needs_ranking = std::any_of(a.keep.begin(), a.keep.end(), [](double k) { return k < 1.0; });
  std::vector<std::string> ranking;
  if (needs_ranking) {
    if (a.filter_model.empty()) throw InvalidArgument("--keep below 1 requires --filter-model");
    ranking = rank_articles(load_filter_model(a.filter_model), passages);
  }

  std::vector<std::optional<std::size_t>> dims;
  if (a.d_r.empty()) dims.push_back(std::nullopt);
  for (auto d : a.d_r) dims.push_back(d == P.d ? std::nullopt : std::optional<std::size_t>(d));

  std::vector<SweepConfig> grid;
  std::vector<SweepRow> rows;
  for (const auto& dr : dims) {
    for (auto b : a.bits) {
      for (double k : a.keep) {
        try {
          grid.push_back(config_for_bits(P.d, dr, b, a.code_bits, k));
        } catch (const InvalidArgument& e) {
          std::cerr << "slimdex: skipping d_R=" << dr.value_or(P.d) << " bits=" << b << ": " << e.what() << '\n';
        }
      }
    }
  }
  if (grid.empty()) throw InvalidArgument("sweep grid is empty");

  SweepCorpus corpus{&P, passages, &qv, queries, ranking};
  SweepOptions opts;
  opts.measure_time = a.timing;
  opts.pq_options.max_training_points = a.max_training_points;
  rows = run_sweep(corpus, grid, a.seed, opts);
  for (const auto& r : rows) {
    if (!r.error.empty()) std::cerr << "slimdex: config " << r.mode << " d_R=" << r.d_r << " failed: " << r.error << '\n';
  }
  io::write_file_atomic(a.out, sweep_to_csv(rows));
  log("sweep wrote " + std::to_string(rows.size()) + " rows");
}

// ---------------------------------------------------------------------------

struct SizeArgs {
  std::string index;
  std::uint64_t n = 0;
  std::size_t d = 0;
  std::string mode = "flat32";
  std::size_t n_v = 0;
  std::size_t n_b = 0;
  std::vector<std::string> params;
  std::string out;
};

void run_size(const SizeArgs& a) {
  echo("size", {{"index", a.index}, {"n", a.n}, {"d", a.d}, {"mode", a.mode}, {"n_v", a.n_v}, {"n_b", a.n_b},
                {"params", a.params}, {"out", a.out}});
  std::vector<SizeComponent> parts;
  json report;
  if (!a.index.empty()) {
    const auto r = load_index(a.index).size_report();
    report["index"] = r.to_json();
    parts.push_back({"index", r.total_bytes});
  }
  if (a.n > 0) {
    if (a.d == 0) throw InvalidArgument("--n requires --d");
    const auto mode = parse_storage_mode(a.mode);
    if (mode == StorageMode::kPQ) validate_pq_params(a.d, a.n_v, a.n_b);
    const auto pb = payload_bytes(mode, a.n, a.d, a.n_v, a.n_b);
    report["payload"] = {{"vectors", pb.vectors}, {"codebook", pb.codebook}};
    parts.push_back({"vectors", pb.vectors + pb.codebook});
  }
  for (const auto& p : a.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("--params entries look like name=count, got '" + p + "'");
    std::uint64_t count = 0;
    const auto tail = std::string_view(p).substr(eq + 1);
    auto [end, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), count);
    if (ec != std::errc() || end != tail.data() + tail.size()) {
      // Accept scientific notation such as 220e6.
      try {
        std::size_t used = 0;
        const double v = std::stod(std::string(tail), &used);
        if (used != tail.size() || v < 0) throw std::invalid_argument("");
        count = static_cast<std::uint64_t>(std::llround(v));
      } catch (const std::exception&) {
        throw InvalidArgument("bad parameter count in '" + p + "'");
      }
    }
    parts.push_back({p.substr(0, eq), parameter_bytes(count)});
  }
  if (parts.empty()) throw InvalidArgument("size needs --index, --n/--d, or --params");
  const auto sys = system_size_report(parts);
  report["total_bytes"] = sys.total_bytes;
  report["components"] = json::array();
  for (const auto& c : sys.components) report["components"].push_back({{"name", c.name}, {"bytes", c.bytes}});
  std::cerr << sys.format();
  if (a.out.empty()) {
    std::cout << report.dump() << std::endl;
  } else {
    io::write_file_atomic(a.out, report.dump() + "\n");
  }
}

void add_eval_inputs(CLI::App* sub, EvalInputs& in) {
  sub->add_option("--passages", in.passages, "Passages JSONL")->required()->check(CLI::ExistingFile);
  sub->add_option("--queries", in.queries, "Queries JSONL")->required()->check(CLI::ExistingFile);
  sub->add_option("--query-vectors", in.query_vectors, "Query embeddings (EMB1)")
      ->required()
      ->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slimdex: compact dense-retrieval indexes"};
  app.require_subcommand(1);
  app.add_flag("--verbose", g_verbose, "Log progress to stderr");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic clustered corpus");
  s->add_option("--n", synth.spec.n, "Passages")->capture_default_str();
  s->add_option("--d", synth.spec.d, "Dimension")->capture_default_str();
  s->add_option("--clusters", synth.spec.n_clusters, "Clusters (= articles)")->capture_default_str();
  s->add_option("--noise", synth.spec.noise_sigma, "Gaussian noise sigma")->capture_default_str();
  s->add_option("--queries", synth.spec.n_queries, "Queries")->capture_default_str();
  s->add_option("--answer-fraction", synth.spec.answer_fraction, "Fraction of articles holding answers")
      ->capture_default_str();
  s->add_option("--title-noise", synth.spec.title_noise, "Chance a title word or category crosses vocabularies")
      ->capture_default_str();
  s->add_option("--positives-k", synth.positives_k, "Depth of exact retrieval used for filter positives")
      ->capture_default_str();
  s->add_option("--seed", synth.spec.seed, "Seed")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_flag("--verbose", g_verbose);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Build an index from embeddings");
  b->add_option("--embeddings", build.embeddings, "Passage embeddings (EMB1)")->required()->check(CLI::ExistingFile);
  b->add_option("--mode", build.mode, "flat32 | flat16 | pq")->capture_default_str();
  b->add_option("--d-r,--d", build.d_r, "PCA target dimension (0 = no PCA)");
  b->add_option("--n-v", build.n_v, "PQ sub-vectors");
  b->add_option("--n-b", build.n_b, "PQ bits per code");
  b->add_flag("--normalize", build.normalize, "Layer-normalize stored vectors");
  b->add_option("--seed", build.seed, "Seed")->capture_default_str();
  b->add_option("--out", build.out, "Index file")->required();
  b->add_flag("--verbose", g_verbose);

  SearchArgs search;
  auto* q = app.add_subcommand("search", "Top-k search for every query");
  q->add_option("--index", search.index, "Index file")->required()->check(CLI::ExistingFile);
  q->add_option("--queries", search.queries, "Queries JSONL")->required()->check(CLI::ExistingFile);
  q->add_option("--query-vectors", search.query_vectors, "Query embeddings (EMB1)")
      ->required()
      ->check(CLI::ExistingFile);
  q->add_option("--k", search.k, "Results per query")->capture_default_str();
  q->add_option("--out", search.out, "Results JSONL")->required();
  q->add_flag("--verbose", g_verbose);
  std::uint64_t unused_seed = 0;
  q->add_option("--seed", unused_seed, "Accepted for uniformity; search is deterministic");

  FilterTrainArgs ft;
  auto* t = app.add_subcommand("filter-train", "Self-train the passage filter");
  t->add_option("--passages", ft.passages, "Passages JSONL")->required()->check(CLI::ExistingFile);
  t->add_option("--positives", ft.positives, "Positive article ids, one per line")
      ->required()
      ->check(CLI::ExistingFile);
  t->add_option("--rounds", ft.rounds, "Self-training rounds")->capture_default_str();
  t->add_option("--negatives", ft.negatives, "Negatives per round")->capture_default_str();
  t->add_option("--hash-dim", ft.hash_dim, "Feature buckets (power of two)")->capture_default_str();
  t->add_option("--hash-seed", ft.hash_seed, "Feature hash seed")->capture_default_str();
  t->add_option("--l2", ft.l2, "L2 penalty")->capture_default_str();
  t->add_option("--epochs", ft.epochs, "Gradient steps per round")->capture_default_str();
  t->add_option("--seed", ft.seed, "Seed")->capture_default_str();
  t->add_option("--out", ft.out, "Model file")->required();
  t->add_flag("--verbose", g_verbose);

  FilterApplyArgs fa;
  auto* f = app.add_subcommand("filter-apply", "Keep the passages of the top-ranked articles");
  f->add_option("--model", fa.model, "Model file")->required()->check(CLI::ExistingFile);
  f->add_option("--passages", fa.passages, "Passages JSONL")->required()->check(CLI::ExistingFile);
  f->add_option("--embeddings", fa.embeddings, "Passage embeddings (EMB1)")->required()->check(CLI::ExistingFile);
  auto* kc = f->add_option("--keep-count", fa.keep_count, "Articles to keep");
  auto* kf = f->add_option("--keep-fraction", fa.keep_fraction, "Fraction of articles to keep");
  kc->excludes(kf);
  f->add_option("--ranking-out", fa.ranking_out, "Also write the article ranking here");
  f->add_option("--out", fa.out, "Filtered embeddings (EMB1)")->required();
  f->add_flag("--verbose", g_verbose);
  f->add_option("--seed", unused_seed, "Accepted for uniformity; filtering is deterministic");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "P@k and recall for one index, as a sweep CSV row");
  e->add_option("--index", ev.index, "Index file")->required()->check(CLI::ExistingFile);
  e->add_option("--embeddings", ev.embeddings, "Embeddings the index was built from")
      ->required()
      ->check(CLI::ExistingFile);
  add_eval_inputs(e, ev.in);
  e->add_option("--out", ev.out, "CSV file (default stdout)");
  e->add_flag("--verbose", g_verbose);
  e->add_option("--seed", unused_seed, "Accepted for uniformity; evaluation is deterministic");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Size/accuracy sweep over dimensions, bit budgets and filtering");
  w->add_option("--embeddings", sw.embeddings, "Passage embeddings (EMB1)")->required()->check(CLI::ExistingFile);
  add_eval_inputs(w, sw.in);
  w->add_option("--d-r", sw.d_r, "PCA dimensions (default: none)");
  w->add_option("--bits", sw.bits, "Bits per dimension")->capture_default_str();
  w->add_option("--code-bits", sw.code_bits, "PQ code width for lossy points")->capture_default_str();
  w->add_option("--keep", sw.keep, "Article keep fractions")->capture_default_str();
  w->add_option("--filter-model", sw.filter_model, "Filter model ranking articles for --keep")
      ->check(CLI::ExistingFile);
  w->add_flag("--timing", sw.timing, "Record wall time per row (breaks byte-identical reruns)");
  w->add_option("--max-training-points", sw.max_training_points, "PQ training subsample")->capture_default_str();
  w->add_option("--seed", sw.seed, "Seed")->capture_default_str();
  w->add_option("--out", sw.out, "CSV file")->required();
  w->add_flag("--verbose", g_verbose);

  SizeArgs sz;
  auto* z = app.add_subcommand("size", "Storage budget from an index, a configuration, or parameter counts");
  z->add_option("--index", sz.index, "Index file")->check(CLI::ExistingFile);
  z->add_option("--n", sz.n, "Vector count for arithmetic sizing");
  z->add_option("--d", sz.d, "Stored dimension for arithmetic sizing");
  z->add_option("--mode", sz.mode, "flat32 | flat16 | pq")->capture_default_str();
  z->add_option("--n-v", sz.n_v, "PQ sub-vectors");
  z->add_option("--n-b", sz.n_b, "PQ bits per code");
  z->add_option("--params", sz.params, "Model components as name=parameter_count (4 bytes each)");
  z->add_option("--out", sz.out, "JSON report file (default stdout)");
  z->add_flag("--verbose", g_verbose);
  z->add_option("--seed", unused_seed, "Accepted for uniformity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 1;
  }

  try {
    if (*s) run_synth(synth);
    if (*b) run_build(build);
    if (*q) run_search(search);
    if (*t) run_filter_train(ft);
    if (*f) run_filter_apply(fa);
    if (*e) run_eval(ev);
    if (*w) run_sweep_cmd(sw);
    if (*z) run_size(sz);
  } catch (const std::exception& ex) {
    std::cerr << "slimdex: error: " << ex.what() << '\n';
    return 2;
  }
  return 0;
}
