// Library walk-through: build a small synthetic corpus, train the dual encoder,
// and compare dense retrieval with BM25.
#include <cstdio>

#include "dpr/dpr.hpp"
#include "dpr/synthetic.hpp"

int main() {
  dpr::synthetic::Config sc;
  sc.documents = 300;
  sc.questions = 80;
  const auto corpus = dpr::synthetic::generate(sc);

  const auto store = dpr::build_store(corpus.documents, 100);
  const auto bm25 = dpr::build_index(store);
  auto instances = dpr::align_questions(dpr::parse_bioasq_json(corpus.bioasq.dump()), store);
  dpr::attach_negatives(instances, store, bm25, dpr::NegativeConfig{});
  std::printf("%zu passages, %zu training questions\n", store.size(), instances.size());

  dpr::TrainConfig cfg;
  cfg.dim = 64;
  cfg.hash_dim = 4096;
  const auto result = dpr::train(dpr::DatasetSplit{dpr::SplitName::train, instances}, nullptr, cfg,
                                 [](const dpr::EpochMetrics& m) {
                                   std::printf("epoch %zu  loss %.4f\n", m.epoch, m.mean_train_loss);
                                 });

  const auto index = dpr::build_dense_index(result.model, store);
  const auto queries = dpr::eval_queries(instances);
  dpr::EvalReport dense = dpr::evaluate(result.model, index, &store, queries, dpr::EvalConfig{});
  dense.label = {"hashed-bow", cfg.epochs, cfg.batch_size};
  const auto lexical = dpr::evaluate_bm25(bm25, store, queries, dpr::EvalConfig{});
  std::printf("dense hit@1 %.3f  hit@10 %.3f\n", dense.per_k.at(1).hit_rate, dense.per_k.at(10).hit_rate);
  std::printf("bm25  hit@1 %.3f  hit@10 %.3f\n", lexical.per_k.at(1).hit_rate, lexical.per_k.at(10).hit_rate);
  std::fputs(dpr::report_to_markdown(dense).c_str(), stdout);

  const auto& q = instances.front().question;
  std::printf("\nQ: %s\n", q.text.c_str());
  for (const auto& hit : index.search(result.model.encode_question(q.text), 3).hits) {
    std::printf("%zu. %s  %.3f\n", hit.rank, hit.passage_id.c_str(), hit.score);
  }
}
