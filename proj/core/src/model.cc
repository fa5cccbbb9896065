#include "kgcopy/model.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kgcopy {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

VectorXd Sigmoid(const VectorXd& z) {
  return z.unaryExpr([](double x) { return Sigmoid(x); });
}

VectorXd Softmax(const VectorXd& x) {
  if (x.size() == 0) return x;
  VectorXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

LstmWeights LstmZeros(int in, int h) {
  return LstmWeights{MatrixXd::Zero(4 * h, in), MatrixXd::Zero(4 * h, h),
                     VectorXd::Zero(4 * h)};
}

struct LstmCache {
  VectorXd x;
  VectorXd h_prev;
  VectorXd c_prev;
  VectorXd i, f, g, o;
  VectorXd tanh_c;
};

LstmState LstmForward(const LstmWeights& w, const VectorXd& x, const LstmState& prev,
                      LstmCache* cache) {
  const Eigen::Index h = prev.h.size();
  VectorXd z = w.input * x + w.recurrent * prev.h + w.bias;
  VectorXd i = Sigmoid(z.segment(0, h));
  VectorXd f = Sigmoid(z.segment(h, h));
  VectorXd g = z.segment(2 * h, h).array().tanh();
  VectorXd o = Sigmoid(z.segment(3 * h, h));
  LstmState next;
  next.c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  VectorXd tanh_c = next.c.array().tanh();
  next.h = o.cwiseProduct(tanh_c);
  if (cache != nullptr) {
    cache->x = x;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

// `dh` and `dc` are the loss gradients w.r.t. this step's h and c.
void LstmBackward(const LstmWeights& w, const LstmCache& c, const VectorXd& dh,
                  const VectorXd& dc, LstmWeights* grad, VectorXd* dx, VectorXd* dh_prev,
                  VectorXd* dc_prev) {
  const Eigen::Index h = dh.size();
  VectorXd one = VectorXd::Ones(h);
  VectorXd dc_total =
      dc + dh.cwiseProduct(c.o).cwiseProduct(one - c.tanh_c.cwiseAbs2());
  VectorXd dz(4 * h);
  dz.segment(0, h) = dc_total.cwiseProduct(c.g).cwiseProduct(c.i.cwiseProduct(one - c.i));
  dz.segment(h, h) =
      dc_total.cwiseProduct(c.c_prev).cwiseProduct(c.f.cwiseProduct(one - c.f));
  dz.segment(2 * h, h) = dc_total.cwiseProduct(c.i).cwiseProduct(one - c.g.cwiseAbs2());
  dz.segment(3 * h, h) =
      dh.cwiseProduct(c.tanh_c).cwiseProduct(c.o.cwiseProduct(one - c.o));
  grad->input.noalias() += dz * c.x.transpose();
  grad->recurrent.noalias() += dz * c.h_prev.transpose();
  grad->bias += dz;
  *dx = w.input.transpose() * dz;
  *dh_prev = w.recurrent.transpose() * dz;
  *dc_prev = dc_total.cwiseProduct(c.f);
}

struct AttentionCache {
  MatrixXd u;  // T x h, tanh of the combined projection
  VectorXd alpha;
};

// `enc_proj` is enc_out times the encoder half of W_c, shared by all steps.
AttentionOutput AttendImpl(const ModelParams& p, const MatrixXd& enc_out,
                           const MatrixXd& enc_proj, const VectorXd& hd,
                           AttentionCache* cache) {
  const int h = p.dims.hidden;
  VectorXd q = p.attn_combine.rightCols(h) * hd;
  MatrixXd u = (enc_proj.rowwise() + q.transpose()).array().tanh();
  VectorXd scores = u * p.attn_score;
  AttentionOutput out;
  out.weights = Softmax(scores);
  out.context = enc_out.transpose() * out.weights;
  if (cache != nullptr) {
    cache->u = std::move(u);
    cache->alpha = out.weights;
  }
  return out;
}

struct HeadResult {
  DecodeStepOutput out;
  VectorXd features;     // [hd; ctx]
  VectorXd gate_input;   // [emb_q + emb_d; kg_sim padded; s_prev]
  VectorXd vocab_probs;  // softmax(o_t)
  bool gate_active = false;
};

HeadResult Head(const ModelParams& p, const VectorXd& hd, const VectorXd& context,
                const GateInputs& gate, const VectorXd& emb_d, double s_prev,
                const DecodeOptions& options) {
  const ModelDims& dims = p.dims;
  const int h = dims.hidden;
  const int k = gate.num_triples();
  HeadResult r;
  r.features.resize(2 * h);
  r.features << hd, context;
  r.out.vocab_logits = p.out_proj * r.features + p.out_bias;
  r.vocab_probs = Softmax(r.out.vocab_logits);

  r.out.kg_scores = VectorXd::Constant(dims.max_triples, kNegInf);
  r.out.kg_scores.head(k) = gate.kg_similarity;

  r.gate_input = VectorXd::Zero(dims.gate_input_size());
  r.gate_input.head(dims.embed) = gate.query_embedding + emb_d;
  r.gate_input.segment(dims.embed, k) = gate.kg_similarity;
  r.gate_input(dims.gate_input_size() - 1) = s_prev;

  double s = 0.0;
  if (options.forced_gate) {
    s = *options.forced_gate;
  } else if (k > 0) {
    s = Sigmoid(p.gate_weights.dot(r.gate_input) + p.gate_bias(0));
    r.gate_active = true;
  }
  r.out.gate = s;

  const int v = dims.vocab_size;
  if (options.raw_mixture) {
    r.out.mixed = VectorXd::Constant(dims.output_size(), kNegInf);
    r.out.mixed.head(v) = (1.0 - s) * r.out.vocab_logits;
    r.out.mixed.segment(v, k) = s * gate.kg_similarity;
  } else {
    r.out.mixed = VectorXd::Zero(dims.output_size());
    r.out.mixed.head(v) = (1.0 - s) * r.vocab_probs;
    if (k > 0) r.out.mixed.segment(v, k) = s * Softmax(gate.kg_similarity);
  }
  return r;
}

void CheckIds(std::span<const int> ids, int vocab_size, const char* what) {
  for (int id : ids) {
    if (id < 0 || id >= vocab_size) {
      throw std::out_of_range(std::string(what) + " id " + std::to_string(id) +
                              " outside vocabulary");
    }
  }
}

double StepVocabLoss(const DecodeStepOutput& out, const OutputToken& y, int v) {
  double prob = out.mixed(y.ExtendedId(v));
  return -std::log(std::max(prob, kProbabilityFloor));
}

double StepGateLoss(double s, int label) {
  return label == 1 ? -std::log(std::max(s, kProbabilityFloor))
                    : -std::log(std::max(1.0 - s, kProbabilityFloor));
}

bool IsPad(const OutputToken& y) {
  return !y.is_copy() && y.index == Vocabulary::kPad;
}

}  // namespace

ModelParams ModelParams::Zeros(const ModelDims& dims) {
  const int h = dims.hidden;
  ModelParams p;
  p.dims = dims;
  p.embedding = MatrixXd::Zero(dims.vocab_size, dims.embed);
  p.encoder = LstmZeros(dims.embed, h);
  p.decoder = LstmZeros(dims.embed, h);
  p.attn_combine = MatrixXd::Zero(h, 2 * h);
  p.attn_score = VectorXd::Zero(h);
  p.out_proj = MatrixXd::Zero(dims.vocab_size, 2 * h);
  p.out_bias = VectorXd::Zero(dims.vocab_size);
  p.gate_weights = VectorXd::Zero(dims.gate_input_size());
  p.gate_bias = VectorXd::Zero(1);
  return p;
}

namespace {

template <typename View, typename Params>
std::vector<View> CollectTensors(Params& p) {
  auto view = [](std::string_view name, ParamGroup group, auto& m) {
    return View{name, group, m.data(), m.rows(), m.cols()};
  };
  constexpr auto kEnc = ParamGroup::kEncoder;
  constexpr auto kDec = ParamGroup::kDecoder;
  return {
      view("embedding", kEnc, p.embedding),
      view("encoder.input", kEnc, p.encoder.input),
      view("encoder.recurrent", kEnc, p.encoder.recurrent),
      view("encoder.bias", kEnc, p.encoder.bias),
      view("decoder.input", kDec, p.decoder.input),
      view("decoder.recurrent", kDec, p.decoder.recurrent),
      view("decoder.bias", kDec, p.decoder.bias),
      view("attention.combine", kDec, p.attn_combine),
      view("attention.score", kDec, p.attn_score),
      view("output.weight", kDec, p.out_proj),
      view("output.bias", kDec, p.out_bias),
      view("gate.weight", kDec, p.gate_weights),
      view("gate.bias", kDec, p.gate_bias),
  };
}

}  // namespace

std::vector<TensorView> ModelParams::Tensors() {
  return CollectTensors<TensorView>(*this);
}

std::vector<ConstTensorView> ModelParams::Tensors() const {
  return CollectTensors<ConstTensorView>(*this);
}

void ModelParams::SetZero() {
  for (auto& t : Tensors()) t.map().setZero();
}

double ModelParams::SquaredNorm() const {
  double sum = 0.0;
  for (const auto& t : Tensors()) sum += t.map().squaredNorm();
  return sum;
}

bool ModelParams::AllFinite() const {
  for (const auto& t : Tensors()) {
    if (!t.map().allFinite()) return false;
  }
  return true;
}

Eigen::Index ModelParams::NumParameters() const {
  Eigen::Index n = 0;
  for (const auto& t : Tensors()) n += t.size();
  return n;
}

ModelParams InitializeParams(const ModelDims& dims, const EmbeddingTable& table,
                             uint64_t seed) {
  if (table.vocab().size() != dims.vocab_size || table.dim() != dims.embed) {
    throw std::invalid_argument("embedding table does not match model dimensions");
  }
  ModelParams p = ModelParams::Zeros(dims);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](auto& m, double fan_in) {
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan_in),
                                             1.0 / std::sqrt(fan_in));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  };
  const int h = dims.hidden;
  for (LstmWeights* w : {&p.encoder, &p.decoder}) {
    fill(w->input, h);
    fill(w->recurrent, h);
    fill(w->bias, h);
  }
  fill(p.attn_combine, 2 * h);
  fill(p.attn_score, h);
  fill(p.out_proj, 2 * h);
  fill(p.out_bias, 2 * h);
  fill(p.gate_weights, dims.gate_input_size());
  p.embedding = table.vectors();
  return p;
}

Eigen::VectorXd KgSimilarity(const Eigen::VectorXd& query, const Eigen::MatrixXd& kg_rows) {
  VectorXd sim = VectorXd::Zero(kg_rows.rows());
  const double qn = query.norm();
  if (qn == 0.0) return sim;
  for (Eigen::Index i = 0; i < kg_rows.rows(); ++i) {
    const double rn = kg_rows.row(i).norm();
    if (rn == 0.0) continue;
    double cosine = std::clamp(kg_rows.row(i).dot(query) / (qn * rn), -1.0, 1.0);
    sim(i) = std::tanh(cosine);
  }
  return sim;
}

LossTerms ComputeLoss(std::span<const DecodeStepOutput> steps,
                      std::span<const OutputToken> target,
                      std::span<const int> sentient_labels, int vocab_size) {
  if (steps.size() != target.size() || target.size() != sentient_labels.size()) {
    throw std::invalid_argument("loss inputs are not aligned");
  }
  LossTerms terms;
  for (size_t t = 0; t < steps.size(); ++t) {
    if (IsPad(target[t])) continue;
    terms.vocab += StepVocabLoss(steps[t], target[t], vocab_size);
    terms.sentient += StepGateLoss(steps[t].gate, sentient_labels[t]);
    ++terms.steps;
  }
  if (terms.steps > 0) {
    terms.vocab /= terms.steps;
    terms.sentient /= terms.steps;
  }
  terms.total = terms.vocab + terms.sentient;
  return terms;
}

KgCopyModel::KgCopyModel(ModelParams params, EmbeddingTable word_vectors)
    : params_(std::move(params)), word_vectors_(std::move(word_vectors)) {
  const ModelDims& d = params_.dims;
  if (word_vectors_.vocab().size() != d.vocab_size || word_vectors_.dim() != d.embed) {
    throw std::invalid_argument("word vectors do not match model dimensions");
  }
  if (params_.embedding.rows() != d.vocab_size || params_.embedding.cols() != d.embed ||
      params_.out_proj.rows() != d.vocab_size ||
      params_.out_proj.cols() != 2 * d.hidden ||
      params_.gate_weights.size() != d.gate_input_size() ||
      params_.encoder.input.rows() != 4 * d.hidden) {
    throw std::invalid_argument("parameter shapes do not match model dimensions");
  }
}

KgContext KgCopyModel::PrepareKg(const LocalKG& kg) const {
  if (kg.size() > dims().max_triples) {
    throw std::invalid_argument("knowledge graph exceeds the model's triple limit");
  }
  KgContext ctx;
  ctx.kg = &kg;
  ctx.embeddings = EmbedTriples(kg, word_vectors_);
  for (int p = 0; p < kg.size(); ++p) {
    ctx.copy_feed_ids.push_back(vocab().Id(kg.object_tokens(p).front()));
  }
  return ctx;
}

Eigen::VectorXd KgCopyModel::QueryEmbedding(std::span<const std::string> query_tokens,
                                            const PosTagger& tagger) const {
  if (query_tokens.empty()) return VectorXd::Zero(dims().embed);
  return ContentWordAverage(query_tokens, word_vectors_, tagger);
}

GateInputs KgCopyModel::MakeGateInputs(std::span<const std::string> query_tokens,
                                       const KgContext* kg) const {
  GateInputs g;
  g.query_embedding = QueryEmbedding(query_tokens);
  if (kg != nullptr && kg->size() > 0) {
    g.kg_similarity = KgSimilarity(g.query_embedding, kg->embeddings.rows);
  } else {
    g.kg_similarity = VectorXd::Zero(0);
  }
  return g;
}

PreparedExample KgCopyModel::Prepare(const TrainingExample& example,
                                     const KgContext* kg) const {
  PreparedExample p;
  p.context_ids = example.context_ids;
  p.target = example.target;
  p.sentient_labels = example.sentient_labels;
  p.gate = MakeGateInputs(example.query_tokens, kg);
  const int k = kg == nullptr ? 0 : kg->size();
  p.decoder_inputs.push_back(Vocabulary::kSos);
  for (size_t t = 0; t + 1 < example.target.size(); ++t) {
    const OutputToken& y = example.target[t];
    if (y.is_copy()) {
      if (y.index < 0 || y.index >= k) {
        throw std::out_of_range("copy target outside the local knowledge graph");
      }
      p.decoder_inputs.push_back(kg->copy_feed_ids[y.index]);
    } else {
      p.decoder_inputs.push_back(y.index);
    }
  }
  if (example.target.empty()) p.decoder_inputs.clear();
  return p;
}

EncoderState KgCopyModel::Encode(std::span<const int> context_ids) const {
  if (context_ids.empty()) throw std::invalid_argument("cannot encode an empty context");
  CheckIds(context_ids, dims().vocab_size, "context");
  const int h = dims().hidden;
  EncoderState enc;
  enc.hidden.resize(static_cast<Eigen::Index>(context_ids.size()), h);
  LstmState state{VectorXd::Zero(h), VectorXd::Zero(h)};
  for (size_t t = 0; t < context_ids.size(); ++t) {
    state = LstmForward(params_.encoder, params_.embedding.row(context_ids[t]).transpose(),
                        state, nullptr);
    enc.hidden.row(static_cast<Eigen::Index>(t)) = state.h.transpose();
  }
  enc.final = std::move(state);
  return enc;
}

AttentionOutput KgCopyModel::Attend(const EncoderState& enc,
                                    const Eigen::VectorXd& dec_hidden) const {
  MatrixXd proj = enc.hidden * params_.attn_combine.leftCols(dims().hidden).transpose();
  return AttendImpl(params_, enc.hidden, proj, dec_hidden, nullptr);
}

std::pair<DecodeStepOutput, LstmState> KgCopyModel::DecodeStep(
    int input_id, const LstmState& state, const EncoderState& enc, const GateInputs& gate,
    double s_prev, const DecodeOptions& options) const {
  if (gate.num_triples() > dims().max_triples) {
    throw std::invalid_argument("more triples than the gate accepts");
  }
  CheckIds(std::span<const int>(&input_id, 1), dims().vocab_size, "decoder input");
  LstmState next = LstmForward(params_.decoder,
                               params_.embedding.row(input_id).transpose(), state, nullptr);
  AttentionOutput att = Attend(enc, next.h);
  HeadResult head = Head(params_, next.h, att.context, gate,
                         word_vectors_.Row(input_id), s_prev, options);
  return {std::move(head.out), std::move(next)};
}

DecodeResult KgCopyModel::GreedyDecode(std::span<const int> context_ids,
                                       const GateInputs& gate,
                                       std::span<const int> copy_feed_ids, int max_len,
                                       const DecodeOptions& options) const {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  if (static_cast<int>(copy_feed_ids.size()) != gate.num_triples()) {
    throw std::invalid_argument("copy feed ids do not match the local KG size");
  }
  const int v = dims().vocab_size;
  const int k = gate.num_triples();
  EncoderState enc = Encode(context_ids);
  // Hoisted out of the loop: the encoder half of the attention projection.
  MatrixXd proj = enc.hidden * params_.attn_combine.leftCols(dims().hidden).transpose();
  DecodeResult result;
  LstmState state = enc.final;
  int input = Vocabulary::kSos;
  double s_prev = 0.0;
  for (int step = 0; step < max_len; ++step) {
    state = LstmForward(params_.decoder, params_.embedding.row(input).transpose(), state,
                        nullptr);
    AttentionOutput att = AttendImpl(params_, enc.hidden, proj, state.h, nullptr);
    HeadResult head = Head(params_, state.h, att.context, gate, word_vectors_.Row(input),
                           s_prev, options);
    // Padded KG slots can never win: they are 0 or -inf.
    Eigen::Index best = 0;
    head.out.mixed.head(v + k).maxCoeff(&best);
    result.gate_trace.push_back(head.out.gate);
    result.states.push_back(state);
    s_prev = head.out.gate;
    result.steps.push_back(std::move(head.out));
    OutputToken token = OutputToken::FromExtendedId(static_cast<int>(best), v);
    if (!token.is_copy() && token.index == Vocabulary::kEos) break;
    result.tokens.push_back(token);
    input = token.is_copy() ? copy_feed_ids[token.index] : token.index;
  }
  return result;
}

std::vector<DecodeStepOutput> KgCopyModel::TeacherForce(const PreparedExample& example,
                                                        std::vector<LstmState>* states) const {
  std::vector<DecodeStepOutput> outputs;
  EncoderState enc = Encode(example.context_ids);
  LstmState state = enc.final;
  double s_prev = 0.0;
  for (int input : example.decoder_inputs) {
    auto [out, next] = DecodeStep(input, state, enc, example.gate, s_prev);
    s_prev = out.gate;
    state = std::move(next);
    if (states != nullptr) states->push_back(state);
    outputs.push_back(std::move(out));
  }
  return outputs;
}

LossSums KgCopyModel::ForwardBackward(const PreparedExample& ex, double weight,
                                      ModelParams* grads, std::mt19937_64* rng,
                                      const DropoutRates& dropout) const {
  const ModelParams& p = params_;
  const int h = dims().hidden;
  const int v = dims().vocab_size;
  const int k = ex.gate.num_triples();
  const int T = static_cast<int>(ex.context_ids.size());
  const int n = static_cast<int>(ex.target.size());
  if (T == 0) throw std::invalid_argument("cannot encode an empty context");
  if (static_cast<int>(ex.decoder_inputs.size()) != n ||
      static_cast<int>(ex.sentient_labels.size()) != n) {
    throw std::invalid_argument("prepared example is not aligned");
  }
  if (k > dims().max_triples) throw std::invalid_argument("more triples than the gate accepts");
  CheckIds(ex.context_ids, v, "context");
  CheckIds(ex.decoder_inputs, v, "decoder input");

  std::bernoulli_distribution keep_rnn(1.0 - dropout.rnn);
  std::bernoulli_distribution keep_emb(1.0 - dropout.embedding);
  auto mask = [&](int size, double rate, std::bernoulli_distribution& keep) {
    VectorXd m = VectorXd::Ones(size);
    if (rng == nullptr || rate <= 0.0) return m;
    const double scale = 1.0 / (1.0 - rate);
    for (int i = 0; i < size; ++i) m(i) = keep(*rng) ? scale : 0.0;
    return m;
  };

  // Encoder.
  std::vector<LstmCache> enc_cache(T);
  std::vector<VectorXd> enc_in_mask(T);
  MatrixXd enc_mask(T, h);
  MatrixXd enc_out(T, h);
  LstmState state{VectorXd::Zero(h), VectorXd::Zero(h)};
  for (int t = 0; t < T; ++t) {
    enc_in_mask[t] = mask(dims().embed, dropout.embedding, keep_emb);
    VectorXd x = p.embedding.row(ex.context_ids[t]).transpose().cwiseProduct(enc_in_mask[t]);
    state = LstmForward(p.encoder, x, state, &enc_cache[t]);
    enc_mask.row(t) = mask(h, dropout.rnn, keep_rnn).transpose();
    enc_out.row(t) = state.h.transpose().cwiseProduct(enc_mask.row(t));
  }
  MatrixXd enc_proj = enc_out * p.attn_combine.leftCols(h).transpose();

  // Decoder, teacher forced.
  struct StepCache {
    LstmCache lstm;
    VectorXd in_mask;
    VectorXd out_mask;
    VectorXd hd;
    AttentionCache att;
    HeadResult head;
  };
  std::vector<StepCache> steps(n);
  const VectorXd kg_probs = Softmax(ex.gate.kg_similarity);
  LossSums sums;
  double s_prev = 0.0;
  for (int t = 0; t < n; ++t) {
    StepCache& c = steps[t];
    const int input = ex.decoder_inputs[t];
    c.in_mask = mask(dims().embed, dropout.embedding, keep_emb);
    VectorXd x = p.embedding.row(input).transpose().cwiseProduct(c.in_mask);
    state = LstmForward(p.decoder, x, state, &c.lstm);
    c.out_mask = mask(h, dropout.rnn, keep_rnn);
    c.hd = state.h.cwiseProduct(c.out_mask);
    AttentionOutput att = AttendImpl(p, enc_out, enc_proj, c.hd, &c.att);
    c.head = Head(p, c.hd, att.context, ex.gate, word_vectors_.Row(input), s_prev, {});
    s_prev = c.head.out.gate;

    const OutputToken& y = ex.target[t];
    if (IsPad(y)) continue;
    if (y.is_copy() && (y.index < 0 || y.index >= k)) {
      throw std::out_of_range("copy target outside the local knowledge graph");
    }
    if (!y.is_copy() && (y.index < 0 || y.index >= v)) {
      throw std::out_of_range("target id outside vocabulary");
    }
    const double step_vocab = StepVocabLoss(c.head.out, y, v);
    const double step_gate = StepGateLoss(c.head.out.gate, ex.sentient_labels[t]);
    sums.vocab += step_vocab;
    sums.sentient += step_gate;
    sums.total += step_vocab + step_gate;
    ++sums.steps;
  }
  if (grads == nullptr) return sums;

  // Backward.
  ModelParams& g = *grads;
  MatrixXd d_enc_out = MatrixXd::Zero(T, h);
  MatrixXd d_enc_proj = MatrixXd::Zero(T, h);
  VectorXd dh_next = VectorXd::Zero(h);
  VectorXd dc_next = VectorXd::Zero(h);
  double dz_next = 0.0;
  const double w_prev_gate = p.gate_weights(dims().gate_input_size() - 1);
  VectorXd dx, dh_prev, dc_prev;
  for (int t = n - 1; t >= 0; --t) {
    StepCache& c = steps[t];
    const OutputToken& y = ex.target[t];
    const bool pad = IsPad(y);
    const double s = c.head.out.gate;
    const double prob = pad ? 1.0 : c.head.out.mixed(y.ExtendedId(v));
    const bool floored = prob < kProbabilityFloor;

    // Gate: s_t enters the vocabulary loss, its own cross-entropy and the
    // next step's gate input.
    double dz = 0.0;
    if (c.head.gate_active) {
      double direct = 0.0;
      if (!pad) {
        if (!floored) direct += y.is_copy() ? s - 1.0 : s;
        const int label = ex.sentient_labels[t];
        if (label == 1 && s > kProbabilityFloor) direct -= 1.0 - s;
        if (label == 0 && 1.0 - s > kProbabilityFloor) direct += s;
      }
      dz = weight * direct + w_prev_gate * dz_next * s * (1.0 - s);
      g.gate_weights += dz * c.head.gate_input;
      g.gate_bias(0) += dz;
    }
    dz_next = dz;

    // Output projection; only word targets reach the vocabulary softmax.
    VectorXd dhd = VectorXd::Zero(h);
    VectorXd dctx = VectorXd::Zero(h);
    if (!pad && !floored && !y.is_copy()) {
      VectorXd dlogits = weight * c.head.vocab_probs;
      dlogits(y.index) -= weight;
      g.out_proj.noalias() += dlogits * c.head.features.transpose();
      g.out_bias += dlogits;
      VectorXd dfeat = p.out_proj.transpose() * dlogits;
      dhd = dfeat.head(h);
      dctx = dfeat.tail(h);
    }

    // Attention.
    {
      const VectorXd& alpha = c.att.alpha;
      VectorXd dalpha = enc_out * dctx;
      d_enc_out.noalias() += alpha * dctx.transpose();
      VectorXd dscore = (alpha.array() * (dalpha.array() - alpha.dot(dalpha))).matrix();
      g.attn_score.noalias() += c.att.u.transpose() * dscore;
      MatrixXd dpre = (dscore * p.attn_score.transpose()).cwiseProduct(
          (1.0 - c.att.u.array().square()).matrix());
      d_enc_proj += dpre;
      VectorXd dq = dpre.colwise().sum().transpose();
      g.attn_combine.rightCols(h).noalias() += dq * c.hd.transpose();
      dhd.noalias() += p.attn_combine.rightCols(h).transpose() * dq;
    }

    VectorXd dh = dhd.cwiseProduct(c.out_mask) + dh_next;
    LstmBackward(p.decoder, c.lstm, dh, dc_next, &g.decoder, &dx, &dh_prev, &dc_prev);
    g.embedding.row(ex.decoder_inputs[t]) += dx.cwiseProduct(c.in_mask).transpose();
    dh_next = dh_prev;
    dc_next = dc_prev;
  }

  // Encoder.
  g.attn_combine.leftCols(h).noalias() += d_enc_proj.transpose() * enc_out;
  d_enc_out.noalias() += d_enc_proj * p.attn_combine.leftCols(h);
  for (int t = T - 1; t >= 0; --t) {
    VectorXd dh = d_enc_out.row(t).transpose().cwiseProduct(enc_mask.row(t).transpose()) +
                  dh_next;
    LstmBackward(p.encoder, enc_cache[t], dh, dc_next, &g.encoder, &dx, &dh_prev, &dc_prev);
    g.embedding.row(ex.context_ids[t]) += dx.cwiseProduct(enc_in_mask[t]).transpose();
    dh_next = dh_prev;
    dc_next = dc_prev;
  }
  return sums;
}

}  // namespace kgcopy
