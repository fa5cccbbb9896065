#ifndef KGCOPY_TRAINING_H_
#define KGCOPY_TRAINING_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgcopy/corpus.h"
#include "kgcopy/embeddings.h"
#include "kgcopy/kg_store.h"
#include "kgcopy/model.h"

namespace kgcopy {

struct TrainConfig {
  int batch_size = 32;
  int epochs = 100;
  double lr_encoder = 1e-3;
  double lr_decoder = 5e-3;
  double dropout_rnn = 0.3;
  double dropout_emb = 0.4;
  double grad_clip_norm = 5.0;
  uint64_t seed = 42;

  int hidden = 64;
  int embed = kDefaultEmbeddingDim;
  int max_triples = kDefaultMaxTriples;

  int min_count = 1;
  int window = 3;
  int max_context_len = 80;
  double jaccard_threshold = 0.8;
  int max_decode_len = 30;

  std::string select_by = "entity_f1";  // or "bleu"
  bool raw_mixture = false;             // decoding only
  std::string embeddings_path;          // empty: seeded random vectors
  std::string checkpoint_path;          // written whenever validation improves
  std::string metrics_path;             // CSV, one row per epoch
  bool verbose = false;

  LinkOptions link_options() const { return {window, max_context_len, jaccard_threshold}; }
  DropoutRates dropout() const { return {dropout_rnn, dropout_emb}; }

  // `key=value` lines; `#` starts a comment. Unknown keys throw.
  void Set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> ToMap() const;
  uint64_t Hash() const;
  void Validate() const;
};

TrainConfig ParseTrainConfig(const std::string& text);
TrainConfig LoadTrainConfig(const std::string& path);

struct Checkpoint {
  KgCopyModel model;
  TrainConfig config;
  int epoch = -1;
  double valid_entity_f1 = 0.0;
  double valid_bleu = 0.0;
};

// A padded mini-batch. Row r of each matrix belongs to `indices[r]`; padded
// cells hold PAD and a zero mask entry.
struct Batch {
  std::vector<int> indices;
  Eigen::MatrixXi context;         // B x max context length
  Eigen::MatrixXi context_mask;
  std::vector<std::vector<OutputToken>> targets;  // each padded to the max length
  Eigen::MatrixXi target_mask;
  Eigen::MatrixXi sentient_labels;

  int size() const { return static_cast<int>(indices.size()); }
  int PadCount() const;
};

// Shuffles with `seed`, groups examples of similar target and context length
// when `bucket` is set, then shuffles the batch order.
std::vector<Batch> MakeBatches(const std::vector<TrainingExample>& examples, int batch_size,
                               uint64_t seed, bool bucket = true);

struct BatchLog {
  int epoch = 0;
  int batch = 0;
  double total = 0.0;
  double vocab = 0.0;
  double sentient = 0.0;
  double grad_norm = 0.0;        // before clipping
  double clipped_grad_norm = 0.0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double vocab = 0.0;
  double sentient = 0.0;
  double valid_bleu = 0.0;
  double valid_entity_f1 = 0.0;
};

struct TrainingHistory {
  std::vector<BatchLog> batches;
  std::vector<EpochLog> epochs;
};

struct TrainResult {
  Checkpoint best;
  Checkpoint last;
  TrainingHistory history;
};

// Called after every epoch with the log row just written.
using EpochCallback = std::function<void(const EpochLog&)>;

// Teacher-forced multi-task training. Selects the epoch with the best
// validation entity F1 (or BLEU, per config.select_by); ties keep the earlier
// epoch. Throws TrainingError on a non-finite loss.
TrainResult Train(const TrainConfig& config, const std::vector<TrainingExample>& train,
                  const std::vector<TrainingExample>& valid,
                  const std::map<std::string, LocalKG>& kgs, const EmbeddingTable& table,
                  const EpochCallback& on_epoch = {});

struct TeacherForcedAccuracy {
  double token = 0.0;      // argmax of the mixture equals the target
  double sentient = 0.0;   // (s_t > 0.5) equals the label
  LossTerms loss;
  int steps = 0;
};

TeacherForcedAccuracy MeasureTeacherForced(const KgCopyModel& model,
                                           const std::vector<TrainingExample>& examples,
                                           const std::map<std::string, LocalKG>& kgs);

void WriteMetricsCsvHeader(std::ostream& out);
void WriteMetricsCsvRow(std::ostream& out, const EpochLog& row);

}  // namespace kgcopy

#endif  // KGCOPY_TRAINING_H_
