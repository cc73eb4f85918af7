// dpr: command-line front end for the passage retrieval pipeline.
//
//   dpr synth          write a synthetic corpus + BioASQ-style questions
//   dpr ingest         clean and chunk a JSONL corpus into a passage store
//   dpr index-bm25     build the BM25 inverted index over a passage store
//   dpr mine-negatives BM25 hard negatives per question (JSONL)
//   dpr build-dataset  align questions, attach negatives, write DPR JSON splits
//   dpr train          train the two-tower encoder with in-batch negatives
//   dpr index-dense    encode every passage into a flat inner-product index
//   dpr evaluate       hit@k and set P/R/F1 for the dense or BM25 retriever
//   dpr repl           interactive top-k queries
//
// Exit codes: 0 success, 1 internal error, 2 usage/validation, 3 stale input.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpr/dpr.hpp"
#include "dpr/manifest.hpp"
#include "dpr/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitStale = 3;

class UsageError : public dpr::Error {
 public:
  using dpr::Error::Error;
};

void require_file(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

nlohmann::ordered_json config_snapshot(const CLI::App& sub) {
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      std::string joined;
      for (std::size_t i = 0; i < res.size(); ++i) joined += (i ? "," : "") + res[i];
      cfg[name] = joined;
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

// One invocation: validates inputs, then writes each artifact bracketed by its manifest.
class Run {
 public:
  Run(const CLI::App& sub, std::uint64_t seed, const std::vector<std::string>& inputs) {
    manifest_.command = sub.get_name();
    manifest_.config_snapshot = config_snapshot(sub);
    manifest_.seed = seed;
    manifest_.tool_version = std::string(dpr::kVersion);
    manifest_.created_at = dpr::utc_timestamp();
    for (const auto& in : inputs) {
      if (in.empty()) continue;
      dpr::verify_artifact(in);
      manifest_.input_checksums[in] = dpr::io::file_checksum(in);
    }
  }

  void write(const fs::path& artifact, const std::string& bytes) {
    if (artifact.has_parent_path()) fs::create_directories(artifact.parent_path());
    auto m = manifest_;
    dpr::write_manifest(artifact, m);
    dpr::io::write_file(artifact, bytes);
    m.output_checksum = dpr::io::to_hex(dpr::io::fnv1a64(bytes));
    dpr::write_manifest(artifact, m);
  }

 private:
  dpr::RunManifest manifest_;
};

struct Options {
  std::uint64_t seed = 0;

  // synth
  std::string synth_out;
  dpr::synthetic::Config synth;

  // ingest
  std::string corpus;
  std::string store_out;
  std::size_t chunk_size = dpr::kDefaultChunkSize;

  // index-bm25
  std::string bm25_store;
  std::string bm25_out;

  // mine-negatives
  std::string mine_index;
  std::string mine_store;
  std::string mine_questions;
  std::string mine_out;
  std::size_t top_n = 100;
  std::size_t per_question = 1;
  double subsample = 1.0;
  double k1 = 1.2;
  double b = 0.75;

  // build-dataset
  std::string ds_store;
  std::string ds_questions;
  std::string ds_index;
  std::string ds_negatives;
  std::string ds_out_dir;
  std::size_t n_hard = 1;
  std::size_t n_random = 0;
  double dev_fraction = 0.0;
  double test_fraction = 0.0;

  // train
  std::string train_path;
  std::string dev_path;
  std::string model_out;
  std::string metrics_out;
  dpr::TrainConfig train;
  std::string optimizer = "adam";

  // index-dense
  std::string dense_model;
  std::string dense_store;
  std::string dense_out;
  std::size_t batch_rows = 1024;
  std::size_t threads = 1;

  // evaluate
  std::string ev_retriever = "dense";
  std::string ev_model;
  std::string ev_index;
  std::string ev_bm25;
  std::string ev_store;
  std::string ev_dataset;
  std::string ev_out;
  std::string ev_format = "json";
  std::string ev_mode = "answer_string";
  std::string ev_encoder = "hashed-bow";
  std::vector<std::size_t> ev_k{1, 5, 10};

  // repl
  std::string repl_index;
  std::string repl_model;
  std::string repl_store;
  std::size_t repl_k = 10;
};

int cmd_synth(const CLI::App& sub, Options& o) {
  o.synth.seed = o.seed;
  const auto corpus = dpr::synthetic::generate(o.synth);
  Run run(sub, o.seed, {});
  const fs::path dir(o.synth_out);
  run.write(dir / "corpus.jsonl", dpr::synthetic::corpus_jsonl(corpus));
  run.write(dir / "questions.json", corpus.bioasq.dump(2) + "\n");
  std::cout << "documents: " << corpus.documents.size() << "\n"
            << "questions: " << corpus.bioasq["questions"].size() << "\n";
  return kExitOk;
}

int cmd_ingest(const CLI::App& sub, Options& o) {
  require_file(o.corpus, "corpus");
  Run run(sub, o.seed, {o.corpus});
  dpr::IngestStats stats;
  const auto store = dpr::ingest_corpus(o.corpus, o.chunk_size, &stats);
  run.write(o.store_out, dpr::serialize_store(store));
  std::cout << "documents: " << stats.documents << "\n"
            << "passages: " << stats.passages << "\n"
            << "dropped: " << stats.dropped << "\n";
  for (const auto& id : stats.dropped_ids) std::cerr << "dropped empty document: " << id << "\n";
  return kExitOk;
}

int cmd_index_bm25(const CLI::App& sub, Options& o) {
  require_file(o.bm25_store, "passage store");
  Run run(sub, o.seed, {o.bm25_store});
  const auto store = dpr::load_store(o.bm25_store);
  const auto index = dpr::InvertedIndex::build(store);
  run.write(o.bm25_out, index.serialize());
  std::cout << "passages: " << index.size() << "\n"
            << "terms: " << index.postings().size() << "\n"
            << "avg_doc_length: " << index.avg_doc_length() << "\n";
  return kExitOk;
}

dpr::MiningConfig mining_config(const Options& o) {
  dpr::MiningConfig m;
  m.top_n = o.top_n;
  m.per_question = o.per_question;
  m.subsample_fraction = o.subsample;
  m.seed = o.seed;
  m.bm25 = dpr::Bm25Params{o.k1, o.b};
  m.bm25.validate();
  return m;
}

int cmd_mine(const CLI::App& sub, Options& o) {
  require_file(o.mine_index, "BM25 index");
  require_file(o.mine_store, "passage store");
  require_file(o.mine_questions, "questions file");
  Run run(sub, o.seed, {o.mine_index, o.mine_store, o.mine_questions});
  const auto index = dpr::load_bm25_index(o.mine_index);
  const auto store = dpr::load_store(o.mine_store);
  dpr::ParseReport parsed;
  const auto questions = dpr::parse_bioasq(o.mine_questions, &parsed);
  const auto cfg = mining_config(o);
  const auto mask = dpr::make_subsample_mask(store.size(), cfg.subsample_fraction, cfg.seed);
  const auto norm = dpr::normalized_texts(store);

  std::string out;
  std::size_t without = 0;
  for (const auto& q : questions) {
    std::unordered_set<std::size_t> exclude;
    if (auto pos = dpr::align_positive(q, norm)) exclude.insert(*pos);
    const auto mined = dpr::mine_hard_negatives(index, store, q, cfg, exclude, &mask);
    if (mined.empty()) ++without;
    nlohmann::ordered_json j;
    j["question_id"] = q.question_id;
    auto ids = nlohmann::ordered_json::array();
    for (auto ord : mined) ids.push_back(store[ord].passage_id);
    j["hard_negative_ids"] = std::move(ids);
    out += j.dump() + "\n";
  }
  run.write(o.mine_out, out);
  std::cout << "questions: " << questions.size() << "\n"
            << "skipped (type): " << parsed.skipped_type << "\n"
            << "skipped (invalid): " << parsed.skipped_invalid << "\n"
            << "without hard negative: " << without << "\n";
  return kExitOk;
}

std::map<std::string, std::vector<std::string>> load_mined(const std::string& path) {
  std::map<std::string, std::vector<std::string>> out;
  std::istringstream in(dpr::io::read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out[j.at("question_id").get<std::string>()] = j.at("hard_negative_ids").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw dpr::ParseError(std::string("bad negatives record: ") + e.what(), lineno);
    }
  }
  return out;
}

int cmd_build_dataset(const CLI::App& sub, Options& o) {
  require_file(o.ds_store, "passage store");
  require_file(o.ds_questions, "questions file");
  if (o.ds_negatives.empty()) {
    require_file(o.ds_index, "BM25 index");
  } else {
    require_file(o.ds_negatives, "negatives file");
  }
  Run run(sub, o.seed, {o.ds_store, o.ds_questions, o.ds_index, o.ds_negatives});
  const auto store = dpr::load_store(o.ds_store);
  dpr::ParseReport parsed;
  const auto questions = dpr::parse_bioasq(o.ds_questions, &parsed);
  dpr::AlignmentReport aligned;
  auto instances = dpr::align_questions(questions, store, &aligned);
  if (instances.empty()) throw UsageError("no question could be aligned to a passage");

  dpr::NegativeConfig nc;
  nc.n_hard = o.n_hard;
  nc.n_random = o.n_random;
  nc.seed = o.seed;
  nc.mining = mining_config(o);
  dpr::NegativeReport neg;
  if (o.ds_negatives.empty()) {
    dpr::attach_negatives(instances, store, dpr::load_bm25_index(o.ds_index), nc, &neg);
  } else {
    // Pre-mined hard negatives; random negatives are still drawn here.
    const auto mined = load_mined(o.ds_negatives);
    auto hard_free = nc;
    hard_free.n_hard = 0;
    if (nc.n_random > 0) dpr::attach_negatives(instances, store, dpr::InvertedIndex{}, hard_free, &neg);
    for (auto& inst : instances) {
      inst.hard_negatives.clear();
      auto it = mined.find(inst.question.question_id);
      if (it != mined.end()) {
        for (const auto& id : it->second) {
          if (inst.hard_negatives.size() >= nc.n_hard) break;
          if (id == inst.positive.passage_id) continue;
          const auto& p = store.by_id(id);
          if (dpr::contains_answer(p.text, inst.question)) continue;
          inst.hard_negatives.push_back(p);
        }
      }
      if (inst.hard_negatives.size() < nc.n_hard) ++neg.missing_hard;
    }
  }

  const auto splits = dpr::split_instances(instances, o.dev_fraction, o.test_fraction, o.seed);
  const fs::path dir(o.ds_out_dir);
  for (const auto& split : splits) {
    run.write(dir / (std::string(dpr::to_string(split.name)) + ".json"), dpr::serialize_dpr_json(split));
  }
  std::cout << "questions parsed: " << questions.size() << "\n"
            << "skipped (type): " << parsed.skipped_type << "\n"
            << "skipped (invalid): " << parsed.skipped_invalid << "\n"
            << "aligned: " << aligned.aligned << "\n"
            << "dropped (unaligned): " << aligned.dropped << "\n"
            << "missing hard negative: " << neg.missing_hard << "\n"
            << "short random pool: " << neg.short_random << "\n"
            << "train/dev/test: " << splits[0].instances.size() << "/" << splits[1].instances.size() << "/"
            << splits[2].instances.size() << "\n";
  return kExitOk;
}

int cmd_train(const CLI::App& sub, Options& o) {
  require_file(o.train_path, "training set");
  if (!o.dev_path.empty()) require_file(o.dev_path, "dev set");
  Run run(sub, o.seed, {o.train_path, o.dev_path});
  o.train.seed = o.seed;
  o.train.optimizer = dpr::optimizer_from_string(o.optimizer);
  const auto train = dpr::load_dpr_json(o.train_path, dpr::SplitName::train);
  std::optional<dpr::DatasetSplit> dev;
  if (!o.dev_path.empty()) dev = dpr::load_dpr_json(o.dev_path, dpr::SplitName::dev);

  auto result = dpr::train(train, dev ? &*dev : nullptr, o.train, [](const dpr::EpochMetrics& m) {
    std::cout << dpr::metrics_line(m) << std::endl;
  });
  run.write(o.model_out, dpr::serialize_model(result.model));
  if (!o.metrics_out.empty()) {
    std::string lines;
    for (const auto& m : result.epochs) lines += dpr::metrics_line(m) + "\n";
    run.write(o.metrics_out, lines);
  }
  if (result.dropped_remainders) std::cerr << "dropped single-question batches: " << result.dropped_remainders << "\n";
  if (result.duplicate_candidates)
    std::cerr << "duplicate in-batch candidates kept: " << result.duplicate_candidates << "\n";
  return kExitOk;
}

int cmd_index_dense(const CLI::App& sub, Options& o) {
  require_file(o.dense_model, "model");
  require_file(o.dense_store, "passage store");
  Run run(sub, o.seed, {o.dense_model, o.dense_store});
  const auto model = dpr::load_model(o.dense_model);
  const auto store = dpr::load_store(o.dense_store);
  const auto index = dpr::build_dense_index(model, store, o.batch_rows, o.threads);
  run.write(o.dense_out, index.serialize());
  std::cout << "rows: " << index.size() << "\n"
            << "dim: " << index.dim() << "\n";
  return kExitOk;
}

std::size_t manifest_number(const std::string& artifact, const char* key) {
  const auto m = dpr::read_manifest(artifact);
  if (!m || !m->config_snapshot.contains(key)) return 0;
  try {
    return std::stoull(m->config_snapshot[key].get<std::string>());
  } catch (const std::exception&) {
    return 0;
  }
}

int cmd_evaluate(const CLI::App& sub, Options& o) {
  require_file(o.ev_store, "passage store");
  require_file(o.ev_dataset, "dataset");
  const bool dense = o.ev_retriever == "dense";
  if (dense) {
    require_file(o.ev_model, "model");
    require_file(o.ev_index, "dense index");
  } else {
    require_file(o.ev_bm25, "BM25 index");
  }
  Run run(sub, o.seed, {o.ev_store, o.ev_dataset, o.ev_model, o.ev_index, o.ev_bm25});

  dpr::EvalConfig cfg;
  cfg.k_values = o.ev_k;
  cfg.match_mode = dpr::match_mode_from_string(o.ev_mode);
  cfg.validate();
  const auto store = dpr::load_store(o.ev_store);
  const auto split = dpr::load_dpr_json(o.ev_dataset, dpr::SplitName::test);
  const auto queries = dpr::eval_queries(split.instances);

  dpr::EvalReport report;
  if (dense) {
    const auto model = dpr::load_model(o.ev_model);
    const auto index = dpr::load_dense_index(o.ev_index);
    if (index.ids() != [&] {
          std::vector<std::string> ids;
          for (const auto& p : store.passages()) ids.push_back(p.passage_id);
          return ids;
        }()) {
      throw UsageError("dense index was not built from this passage store");
    }
    report = dpr::evaluate(model, index, &store, queries, cfg);
    report.label = dpr::ReportLabel{o.ev_encoder, manifest_number(o.ev_model, "epochs"),
                                    manifest_number(o.ev_model, "batch-size")};
  } else {
    const auto index = dpr::load_bm25_index(o.ev_bm25);
    if (index.size() != store.size()) throw UsageError("BM25 index was not built from this passage store");
    report = dpr::evaluate_bm25(index, store, queries, cfg);
    report.label = dpr::ReportLabel{"bm25", 0, 0};
  }
  const auto fmt = o.ev_format == "json" ? dpr::ReportFormat::json : dpr::ReportFormat::markdown_table;
  run.write(o.ev_out, dpr::render_report(report, fmt));
  for (const auto& [k, m] : report.per_k) {
    std::printf("hit@%zu=%.4f  P=%.4f  R=%.4f  F1=%.4f\n", k, m.hit_rate, m.precision, m.recall, m.f1);
  }
  return kExitOk;
}

int cmd_repl(const CLI::App& sub, Options& o) {
  require_file(o.repl_index, "dense index");
  require_file(o.repl_model, "model");
  require_file(o.repl_store, "passage store");
  for (const auto& in : {o.repl_index, o.repl_model, o.repl_store}) dpr::verify_artifact(in);
  (void)sub;
  const auto index = dpr::load_dense_index(o.repl_index);
  const auto model = dpr::load_model(o.repl_model);
  const auto store = dpr::load_store(o.repl_store);
  if (model.dim() != index.dim()) throw dpr::DimensionError(index.dim(), model.dim());

  std::string line;
  while (std::getline(std::cin, line)) {
    const auto query = dpr::text::collapse_whitespace(line);
    if (query.empty()) continue;
    if (query[0] == ':') {
      if (query == ":quit" || query == ":q") return kExitOk;
      if (query.rfind(":show ", 0) == 0) {
        const auto id = query.substr(6);
        if (auto ord = store.find(id)) {
          const auto& p = store[*ord];
          std::cout << p.passage_id << "\n" << p.title << "\n" << p.text << "\n";
        } else {
          std::cout << "unknown passage id: " << id << "\n";
        }
        continue;
      }
      std::cout << "unknown command: " << query << " (try :show <passage_id> or :quit)\n";
      continue;
    }
    const auto result = index.search(model.encode_question(query), o.repl_k);
    for (const auto& h : result.hits) {
      const auto& p = store.by_id(h.passage_id);
      std::printf("%3zu  %10.4f  %-16s  %s  | %s\n", h.rank, h.score, h.passage_id.c_str(), p.title.c_str(),
                  p.text.substr(0, 120).c_str());
    }
    std::fflush(stdout);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense passage retrieval toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value config file; flags override it");
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(dpr::kVersion));

  Options o;
  app.add_option("--seed", o.seed, "Seed for every random choice")->envname("DPR_SEED");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus and question set");
  synth->add_option("--out-dir", o.synth_out)->required();
  synth->add_option("--documents", o.synth.documents)->check(CLI::PositiveNumber);
  synth->add_option("--passages-per-document", o.synth.passages_per_document)->check(CLI::PositiveNumber);
  synth->add_option("--questions", o.synth.questions)->check(CLI::PositiveNumber);
  synth->add_option("--vocabulary", o.synth.vocabulary)->check(CLI::PositiveNumber);
  synth->add_option("--other-types", o.synth.other_type_questions);

  auto* ingest = app.add_subcommand("ingest", "Clean and chunk a JSONL corpus");
  ingest->add_option("--corpus", o.corpus)->required();
  ingest->add_option("--out", o.store_out)->required();
  ingest->add_option("--chunk-size", o.chunk_size, "Words per passage")->check(CLI::Range(1, 1 << 30));

  auto* bm25 = app.add_subcommand("index-bm25", "Build the BM25 index of a passage store");
  bm25->add_option("--corpus,--store", o.bm25_store, "Passage store")->required();
  bm25->add_option("--out", o.bm25_out)->required();

  auto add_bm25_knobs = [&](CLI::App* s) {
    s->add_option("--top-n", o.top_n, "BM25 candidate pool per question")->check(CLI::Range(1, 1 << 30));
    s->add_option("--subsample", o.subsample, "Fraction of passages eligible for mining")
        ->check(CLI::Range(0.0, 1.0));
    s->add_option("--k1", o.k1)->check(CLI::NonNegativeNumber);
    s->add_option("--b", o.b)->check(CLI::Range(0.0, 1.0));
  };

  auto* mine = app.add_subcommand("mine-negatives", "Mine BM25 hard negatives");
  mine->add_option("--index", o.mine_index)->required();
  mine->add_option("--store", o.mine_store)->required();
  mine->add_option("--questions", o.mine_questions, "BioASQ-style JSON")->required();
  mine->add_option("--out", o.mine_out)->required();
  mine->add_option("--per-question", o.per_question)->check(CLI::PositiveNumber);
  add_bm25_knobs(mine);

  auto* build = app.add_subcommand("build-dataset", "Write DPR JSON train/dev/test splits");
  build->add_option("--store", o.ds_store)->required();
  build->add_option("--questions", o.ds_questions, "BioASQ-style JSON")->required();
  build->add_option("--index", o.ds_index, "BM25 index (mines negatives when --negatives is absent)");
  build->add_option("--negatives", o.ds_negatives, "Output of mine-negatives");
  build->add_option("--out-dir", o.ds_out_dir)->required();
  build->add_option("--n-hard", o.n_hard);
  build->add_option("--n-random", o.n_random);
  build->add_option("--dev-fraction", o.dev_fraction)->check(CLI::Range(0.0, 1.0));
  build->add_option("--test-fraction", o.test_fraction)->check(CLI::Range(0.0, 1.0));
  add_bm25_knobs(build);

  auto* train = app.add_subcommand("train", "Train the dual encoder");
  train->add_option("--train", o.train_path, "DPR JSON training split")->required();
  train->add_option("--dev", o.dev_path, "DPR JSON dev split");
  train->add_option("--out", o.model_out)->required();
  train->add_option("--metrics", o.metrics_out, "Per-epoch metrics JSONL");
  train->add_option("--epochs", o.train.epochs)->check(CLI::Range(1, 1 << 20));
  train->add_option("--batch-size", o.train.batch_size)->check(CLI::Range(2, 1 << 20));
  train->add_option("--lr", o.train.learning_rate)->check(CLI::NonNegativeNumber);
  train->add_option("--dim", o.train.dim)->check(CLI::PositiveNumber);
  train->add_option("--hash-dim", o.train.hash_dim)->check(CLI::PositiveNumber);
  train->add_option("--optimizer", o.optimizer)->check(CLI::IsMember({"adam", "sgd"}));

  auto* dense = app.add_subcommand("index-dense", "Encode passages into a flat inner-product index");
  dense->add_option("--model", o.dense_model)->required();
  dense->add_option("--store", o.dense_store)->required();
  dense->add_option("--out", o.dense_out)->required();
  dense->add_option("--batch-rows", o.batch_rows)->check(CLI::PositiveNumber);
  dense->add_option("--threads", o.threads)->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("evaluate", "Top-k retrieval evaluation");
  eval->add_option("--retriever", o.ev_retriever)->check(CLI::IsMember({"dense", "bm25"}));
  eval->add_option("--model", o.ev_model);
  eval->add_option("--index", o.ev_index, "Dense index");
  eval->add_option("--bm25-index", o.ev_bm25);
  eval->add_option("--store", o.ev_store)->required();
  eval->add_option("--dataset", o.ev_dataset, "DPR JSON split to evaluate")->required();
  eval->add_option("--out", o.ev_out)->required();
  eval->add_option("--format", o.ev_format)->check(CLI::IsMember({"json", "markdown"}));
  eval->add_option("--mode", o.ev_mode)->check(CLI::IsMember({"answer_string", "gold_passage_id"}));
  eval->add_option("--encoder-name", o.ev_encoder);
  eval->add_option("--k", o.ev_k, "Comma-separated ascending k values")->delimiter(',');

  auto* repl = app.add_subcommand("repl", "Interactive top-k queries");
  repl->add_option("--index", o.repl_index)->required();
  repl->add_option("--model", o.repl_model)->required();
  repl->add_option("--store", o.repl_store)->required();
  repl->add_option("--k", o.repl_k)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(*synth, o);
    if (*ingest) return cmd_ingest(*ingest, o);
    if (*bm25) return cmd_index_bm25(*bm25, o);
    if (*mine) return cmd_mine(*mine, o);
    if (*build) return cmd_build_dataset(*build, o);
    if (*train) return cmd_train(*train, o);
    if (*dense) return cmd_index_dense(*dense, o);
    if (*eval) return cmd_evaluate(*eval, o);
    if (*repl) return cmd_repl(*repl, o);
  } catch (const dpr::StaleInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStale;
  } catch (const dpr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const dpr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
