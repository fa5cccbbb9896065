#include "kgcopy/embeddings.h"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "kgcopy/errors.h"

namespace kgcopy {
namespace {

// Fills every row except PAD/UNK with seeded noise, in id order.
Eigen::MatrixXd SeededRows(int rows, int dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.1, 0.1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, dim);
  for (int r = 0; r < rows; ++r) {
    if (r == Vocabulary::kPad || r == Vocabulary::kUnk) continue;
    for (int c = 0; c < dim; ++c) m(r, c) = uniform(rng);
  }
  return m;
}

}  // namespace

EmbeddingTable::EmbeddingTable(Vocabulary vocab, Eigen::MatrixXd vectors)
    : vocab_(std::move(vocab)), vectors_(std::move(vectors)) {
  if (vectors_.rows() != vocab_.size()) {
    throw std::invalid_argument("embedding rows do not match vocabulary size");
  }
  if (!vectors_.allFinite()) {
    throw std::invalid_argument("embedding table contains non-finite values");
  }
}

EmbeddingTable RandomEmbeddings(const Vocabulary& vocab, int dim, uint64_t seed) {
  return EmbeddingTable(vocab, SeededRows(vocab.size(), dim, seed));
}

EmbeddingTable LoadPretrained(const std::string& path, const Vocabulary& vocab,
                              int dim, uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file " + path);

  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": missing header");
  long long declared_count = 0;
  int declared_dim = 0;
  {
    std::istringstream header(line);
    if (!(header >> declared_count >> declared_dim)) {
      throw FormatError(path + ": header must be `count dim`");
    }
  }
  if (declared_dim != dim) {
    throw FormatError(path + ": dimension " + std::to_string(declared_dim) +
                      " does not match expected " + std::to_string(dim));
  }

  Eigen::MatrixXd vectors = SeededRows(vocab.size(), dim, seed);
  std::vector<bool> found(vocab.size(), false);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  int loaded = 0;
  long long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string token;
    row >> token;
    if (!vocab.Contains(token)) continue;
    int id = vocab.Id(token);
    if (id < Vocabulary::kNumReserved || found[id]) continue;
    Eigen::VectorXd v(dim);
    for (int c = 0; c < dim; ++c) {
      if (!(row >> v(c))) {
        throw FormatError(path + ":" + std::to_string(line_no) +
                          ": expected " + std::to_string(dim) + " values");
      }
    }
    double extra;
    if (row >> extra) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": more than " + std::to_string(dim) + " values");
    }
    if (!v.allFinite()) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": non-finite value");
    }
    vectors.row(id) = v.transpose();
    found[id] = true;
    sum += v;
    ++loaded;
  }
  if (loaded > 0) vectors.row(Vocabulary::kUnk) = (sum / loaded).transpose();
  EmbeddingTable table(vocab, std::move(vectors));
  table.set_num_pretrained(loaded);
  return table;
}

Eigen::VectorXd ContentWordAverage(std::span<const std::string> tokens,
                                   const EmbeddingTable& table,
                                   std::span<const PosTag> tags) {
  if (tokens.empty()) throw std::invalid_argument("content average of no tokens");
  if (tags.size() != tokens.size()) {
    throw std::invalid_argument("POS tags do not align with tokens");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dim());
  int n = 0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (!IsContentTag(tags[i])) continue;
    sum += table.Lookup(tokens[i]);
    ++n;
  }
  if (n == 0) {
    for (const auto& t : tokens) sum += table.Lookup(t);
    n = static_cast<int>(tokens.size());
  }
  return sum / n;
}

Eigen::VectorXd ContentWordAverage(std::span<const std::string> tokens,
                                   const EmbeddingTable& table,
                                   const PosTagger& tagger) {
  auto tags = tagger.Tag(tokens);
  return ContentWordAverage(tokens, table, tags);
}

}  // namespace kgcopy
