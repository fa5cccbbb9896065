#ifndef KGCOPY_EMBEDDINGS_H_
#define KGCOPY_EMBEDDINGS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgcopy/pos_tagger.h"
#include "kgcopy/vocabulary.h"

namespace kgcopy {

inline constexpr int kDefaultEmbeddingDim = 300;
inline constexpr uint64_t kDefaultEmbeddingSeed = 1234;

// Word vectors restricted to a vocabulary; row i belongs to vocabulary id i.
class EmbeddingTable {
 public:
  EmbeddingTable(Vocabulary vocab, Eigen::MatrixXd vectors);

  int dim() const { return static_cast<int>(vectors_.cols()); }
  const Vocabulary& vocab() const { return vocab_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  Eigen::VectorXd Row(int id) const { return vectors_.row(id).transpose(); }
  // Tokens outside the vocabulary fall back to the UNK vector.
  Eigen::VectorXd Lookup(const std::string& token) const {
    return Row(vocab_.Id(token));
  }

  // Number of vocabulary tokens (excluding reserved ids) that were found in
  // the pretrained file.
  int num_pretrained() const { return num_pretrained_; }
  void set_num_pretrained(int n) { num_pretrained_ = n; }

 private:
  Vocabulary vocab_;
  Eigen::MatrixXd vectors_;
  int num_pretrained_ = 0;
};

// Reads a text vector file (`N D` header, then `token v1 .. vD` per line).
// Vocabulary tokens missing from the file get seeded U(-0.1, 0.1) vectors,
// PAD is zero and UNK is the mean of the vectors that were found.
EmbeddingTable LoadPretrained(const std::string& path, const Vocabulary& vocab,
                              int dim = kDefaultEmbeddingDim,
                              uint64_t seed = kDefaultEmbeddingSeed);

// Same table LoadPretrained produces when nothing in the file matches.
EmbeddingTable RandomEmbeddings(const Vocabulary& vocab,
                                int dim = kDefaultEmbeddingDim,
                                uint64_t seed = kDefaultEmbeddingSeed);

// Mean embedding of the NOUN/PROPN/VERB tokens; when none qualify, the mean
// over all tokens. `tags` must align with `tokens`.
Eigen::VectorXd ContentWordAverage(std::span<const std::string> tokens,
                                   const EmbeddingTable& table,
                                   std::span<const PosTag> tags);

Eigen::VectorXd ContentWordAverage(std::span<const std::string> tokens,
                                   const EmbeddingTable& table,
                                   const PosTagger& tagger = DefaultTagger());

}  // namespace kgcopy

#endif  // KGCOPY_EMBEDDINGS_H_
