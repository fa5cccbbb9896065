#ifndef KGCOPY_MODEL_H_
#define KGCOPY_MODEL_H_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "kgcopy/corpus.h"
#include "kgcopy/embeddings.h"
#include "kgcopy/kg_store.h"

namespace kgcopy {

// Floor applied to probabilities before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

struct ModelDims {
  int vocab_size = 0;
  int hidden = 64;
  int embed = kDefaultEmbeddingDim;
  int max_triples = kDefaultMaxTriples;

  int gate_input_size() const { return embed + max_triples + 1; }
  int output_size() const { return vocab_size + max_triples; }
  bool operator==(const ModelDims&) const = default;
};

// Encoder parameters (word embeddings included) and everything after the
// encoder train with separate learning rates.
enum class ParamGroup { kEncoder, kDecoder };

struct LstmWeights {
  Eigen::MatrixXd input;      // 4h x in, gate blocks ordered i, f, g, o
  Eigen::MatrixXd recurrent;  // 4h x h
  Eigen::VectorXd bias;       // 4h
};

struct TensorView {
  std::string_view name;
  ParamGroup group;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
  Eigen::Map<Eigen::MatrixXd> map() const { return {data, rows, cols}; }
};

struct ConstTensorView {
  std::string_view name;
  ParamGroup group;
  const double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
  Eigen::Map<const Eigen::MatrixXd> map() const { return {data, rows, cols}; }
};

// All trainable weights. The same struct doubles as a gradient buffer.
struct ModelParams {
  ModelDims dims;
  Eigen::MatrixXd embedding;     // v x d_emb, row per vocabulary id
  LstmWeights encoder;           // input size d_emb
  LstmWeights decoder;           // input size d_emb
  Eigen::MatrixXd attn_combine;  // h x 2h over [encoder state; decoder state]
  Eigen::VectorXd attn_score;    // h
  Eigen::MatrixXd out_proj;      // v x 2h over [decoder state; attention context]
  Eigen::VectorXd out_bias;      // v
  Eigen::VectorXd gate_weights;  // d_emb + k_max + 1 over [emb_q + emb_d; kg_sim; s_prev]
  Eigen::VectorXd gate_bias;     // 1

  static ModelParams Zeros(const ModelDims& dims);

  std::vector<TensorView> Tensors();
  std::vector<ConstTensorView> Tensors() const;

  void SetZero();
  double SquaredNorm() const;
  bool AllFinite() const;
  Eigen::Index NumParameters() const;
};

// Uniform(-1/sqrt(fan), 1/sqrt(fan)) weights; the embedding layer starts from
// `table`.
ModelParams InitializeParams(const ModelDims& dims, const EmbeddingTable& table,
                             uint64_t seed);

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

struct EncoderState {
  Eigen::MatrixXd hidden;  // T x h, row t is h_t
  LstmState final;         // decoder initial state; final.h is the context c

  int length() const { return static_cast<int>(hidden.rows()); }
};

struct AttentionOutput {
  Eigen::VectorXd weights;  // T, sums to 1
  Eigen::VectorXd context;  // h
};

// Inputs of the sentient gate that stay fixed while decoding one response.
struct GateInputs {
  Eigen::VectorXd query_embedding;  // emb_q
  Eigen::VectorXd kg_similarity;    // k entries of tanh(cos(emb_q, emb_kg_i))

  int num_triples() const { return static_cast<int>(kg_similarity.size()); }
};

// tanh of the cosine between `query` and each row. Rows or queries with zero
// norm give similarity 0.
Eigen::VectorXd KgSimilarity(const Eigen::VectorXd& query, const Eigen::MatrixXd& kg_rows);

struct DecodeStepOutput {
  Eigen::VectorXd vocab_logits;  // v
  Eigen::VectorXd kg_scores;     // k_max, -inf past the local KG size
  double gate = 0.0;             // s_t
  // v + k_max. A probability distribution unless raw_mixture is set, in which
  // case it holds (1 - s) * o_t ++ s * kg_sim with -inf padding.
  Eigen::VectorXd mixed;
};

struct DecodeOptions {
  // Literal weighted sum of logits and similarities, for comparison only.
  bool raw_mixture = false;
  // Overrides s_t, e.g. to inspect the endpoints of the mixture.
  std::optional<double> forced_gate;
};

struct DecodeResult {
  std::vector<OutputToken> tokens;  // EOS excluded
  std::vector<double> gate_trace;   // s_t per emitted step, EOS step included
  std::vector<LstmState> states;    // decoder state after each step
  std::vector<DecodeStepOutput> steps;
};

// Per-team state for decoding: triple embeddings and the vocabulary id fed
// back to the decoder after copy(j), i.e. the object's first token.
struct KgContext {
  const LocalKG* kg = nullptr;
  TripleEmbeddingMatrix embeddings;
  std::vector<int> copy_feed_ids;

  int size() const { return static_cast<int>(copy_feed_ids.size()); }
};

// Model-ready view of a TrainingExample.
struct PreparedExample {
  std::vector<int> context_ids;
  std::vector<OutputToken> target;
  std::vector<int> sentient_labels;
  std::vector<int> decoder_inputs;  // SOS followed by the fed-back targets
  GateInputs gate;
};

struct LossTerms {
  double total = 0.0;
  double vocab = 0.0;
  double sentient = 0.0;
  int steps = 0;
};

// Summed (not averaged) per-step losses of one example.
struct LossSums {
  double total = 0.0;  // accumulated per step, not vocab + sentient
  double vocab = 0.0;
  double sentient = 0.0;
  int steps = 0;
};

struct DropoutRates {
  double rnn = 0.3;
  double embedding = 0.4;
};

// Mean negative log of mixed[target] and mean gate binary cross-entropy over
// non-PAD steps; total is their sum.
LossTerms ComputeLoss(std::span<const DecodeStepOutput> steps,
                      std::span<const OutputToken> target,
                      std::span<const int> sentient_labels, int vocab_size);

class KgCopyModel {
 public:
  // `word_vectors` is the frozen table used by the gate (emb_q, emb_d and the
  // triple embeddings); its vocabulary is the model vocabulary.
  KgCopyModel(ModelParams params, EmbeddingTable word_vectors);

  const ModelDims& dims() const { return params_.dims; }
  const ModelParams& params() const { return params_; }
  ModelParams& mutable_params() { return params_; }
  const EmbeddingTable& word_vectors() const { return word_vectors_; }
  const Vocabulary& vocab() const { return word_vectors_.vocab(); }

  KgContext PrepareKg(const LocalKG& kg) const;
  Eigen::VectorXd QueryEmbedding(std::span<const std::string> query_tokens,
                                 const PosTagger& tagger = DefaultTagger()) const;
  GateInputs MakeGateInputs(std::span<const std::string> query_tokens,
                            const KgContext* kg) const;
  // `kg` may be null only when the example has no copy targets.
  PreparedExample Prepare(const TrainingExample& example, const KgContext* kg) const;

  EncoderState Encode(std::span<const int> context_ids) const;
  AttentionOutput Attend(const EncoderState& enc, const Eigen::VectorXd& dec_hidden) const;
  std::pair<DecodeStepOutput, LstmState> DecodeStep(int input_id, const LstmState& state,
                                                    const EncoderState& enc,
                                                    const GateInputs& gate, double s_prev,
                                                    const DecodeOptions& options = {}) const;

  // Feeds the argmax of each step back in; copy(j) is fed as
  // `copy_feed_ids[j]`. Stops at EOS or after `max_len` steps.
  DecodeResult GreedyDecode(std::span<const int> context_ids, const GateInputs& gate,
                            std::span<const int> copy_feed_ids, int max_len,
                            const DecodeOptions& options = {}) const;

  // Ground-truth inputs at every step, no dropout.
  std::vector<DecodeStepOutput> TeacherForce(const PreparedExample& example,
                                             std::vector<LstmState>* states = nullptr) const;

  // Teacher-forced forward and backward pass. Gradients of
  // weight * (sum of per-step losses) are added to `grads`. Dropout is
  // applied when `rng` is non-null.
  LossSums ForwardBackward(const PreparedExample& example, double weight,
                           ModelParams* grads, std::mt19937_64* rng = nullptr,
                           const DropoutRates& dropout = {}) const;

 private:
  ModelParams params_;
  EmbeddingTable word_vectors_;
};

}  // namespace kgcopy

#endif  // KGCOPY_MODEL_H_
