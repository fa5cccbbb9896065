#include <benchmark/benchmark.h>

#include <random>

#include "kgcopy/model.h"

namespace {

using kgcopy::KgCopyModel;

KgCopyModel MakeModel(int vocab_words, int hidden, int embed, int max_triples) {
  std::vector<std::string> words;
  for (int i = 0; i < vocab_words; ++i) words.push_back("w" + std::to_string(i));
  kgcopy::Vocabulary vocab(words);
  kgcopy::EmbeddingTable table = kgcopy::RandomEmbeddings(vocab, embed, 1);
  kgcopy::ModelDims dims{vocab.size(), hidden, embed, max_triples};
  kgcopy::ModelParams params = kgcopy::InitializeParams(dims, table, 2);
  return KgCopyModel(std::move(params), std::move(table));
}

std::vector<int> Context(int length, int vocab) {
  std::mt19937 rng(3);
  std::vector<int> ids(length);
  for (int& id : ids) id = std::uniform_int_distribution<int>(5, vocab - 1)(rng);
  return ids;
}

void BM_DecodeStep(benchmark::State& state) {
  const int vocab = static_cast<int>(state.range(0));
  KgCopyModel model = MakeModel(vocab, 64, 300, 64);
  auto enc = model.Encode(Context(40, model.dims().vocab_size));
  kgcopy::GateInputs gate{Eigen::VectorXd::Random(300), Eigen::VectorXd::Random(12)};
  kgcopy::LstmState s{Eigen::VectorXd::Zero(64), Eigen::VectorXd::Zero(64)};
  for (auto _ : state) {
    auto out = model.DecodeStep(kgcopy::Vocabulary::kSos, s, enc, gate, 0.0);
    benchmark::DoNotOptimize(out.first.mixed.data());
  }
}
BENCHMARK(BM_DecodeStep)->Arg(1000)->Arg(10000);

void BM_GreedyDecode(benchmark::State& state) {
  KgCopyModel model = MakeModel(5000, 64, 300, 64);
  auto context = Context(static_cast<int>(state.range(0)), model.dims().vocab_size);
  kgcopy::GateInputs gate{Eigen::VectorXd::Random(300), Eigen::VectorXd::Random(12)};
  std::vector<int> feed(12, 7);
  for (auto _ : state) {
    auto d = model.GreedyDecode(context, gate, feed, 30);
    benchmark::DoNotOptimize(d.tokens.data());
  }
}
BENCHMARK(BM_GreedyDecode)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
