#include <benchmark/benchmark.h>

#include "cipher/debate.hpp"
#include "cipher/decoding.hpp"
#include "cipher/evaluation.hpp"
#include "cipher/model.hpp"

using namespace cipher;

namespace {

std::shared_ptr<lm::TransformerModel> bench_model(int max_seq_len) {
  lm::TransformerConfig config;
  config.n_layers = 4;
  config.n_heads = 4;
  config.d_model = 64;
  config.d_ff = 256;
  config.max_seq_len = max_seq_len;
  std::vector<std::string> tokens = {"</s>"};
  for (int i = 1; i < 256; ++i) tokens.push_back("w" + std::to_string(i));
  SpecialIds special;
  special.eos = 0;
  return std::make_shared<lm::TransformerModel>(config, lm::random_weights(config, 256, 5),
                                                Vocabulary(std::move(tokens), special));
}

void BM_ForwardLogits(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const auto model = bench_model(1024);
  EmbeddingSeq ctx(64);
  for (std::size_t t = 0; t < len; ++t) {
    ctx.append(model->embeddings().row(static_cast<TokenId>(t % 256)));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(model->forward_logits(ctx));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ForwardLogits)->Arg(16)->Arg(64)->Arg(256);

void BM_CipherStep(benchmark::State& state) {
  const int vocab = static_cast<int>(state.range(0));
  const auto table = EmbeddingTable::random(vocab, 64, 7);
  LogitVector logits(static_cast<std::size_t>(vocab));
  CountingRng rng(11);
  for (auto& l : logits) l = static_cast<float>(rng.next_unit() * 8.0 - 4.0);
  const auto b = decoding::belief(logits, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decoding::cipher_step(b, table));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CipherStep)->Arg(256)->Arg(4096)->Arg(32768);

void BM_NnDecode(benchmark::State& state) {
  const int vocab = static_cast<int>(state.range(0));
  const auto table = EmbeddingTable::random(vocab, 64, 9);
  const auto probe = table.row(vocab / 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decoding::nn_decode(probe, table));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NnDecode)->Arg(256)->Arg(4096)->Arg(32768);

void BM_GenerateCipher(benchmark::State& state) {
  const auto model = bench_model(256);
  const std::vector<TokenId> prompt = {1, 2, 3, 4};
  decoding::GenerationParams params;
  params.temperature = 1.0;
  params.max_new = static_cast<int>(state.range(0));
  const auto prompt_vecs = embed_tokens(prompt, model->embeddings());
  for (auto _ : state) {
    benchmark::DoNotOptimize(decoding::generate_cipher(*model, prompt_vecs, params));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateCipher)->Arg(16)->Arg(64);

void BM_DebateRound(benchmark::State& state) {
  const auto model = bench_model(512);
  debate::DebateConfig config;
  config.debaters = {debate::DebaterSpec{model, 0.5, decoding::Mode::cipher, {}, debate::Role::standard, 16},
                     debate::DebaterSpec{model, 1.5, decoding::Mode::cipher, {}, debate::Role::standard, 16}};
  config.rounds = static_cast<int>(state.range(0));
  // Template and question text drawn from the synthetic vocabulary.
  config.templates.initial = "w1{question}w2";
  config.templates.debate = "w1{question}{responses}w2";
  config.templates.answer = "w3{answer}";
  config.separator = "w9";
  eval::TaskInstance task;
  task.id = "bench";
  task.question = "w5w6";
  task.answer = "w7";
  for (auto _ : state) {
    benchmark::DoNotOptimize(debate::run_debate(config, task));
  }
}
BENCHMARK(BM_DebateRound)->Arg(1)->Arg(2)->Arg(3);

}  // namespace

BENCHMARK_MAIN();
