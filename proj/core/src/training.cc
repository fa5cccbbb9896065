#include "kgcopy/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "kgcopy/checkpoint.h"
#include "kgcopy/errors.h"
#include "kgcopy/evaluation.h"
#include "kgcopy/optimizer.h"

namespace kgcopy {
namespace {

std::string Trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool ParseBool(const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw std::invalid_argument("not a boolean: " + value);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) {
    throw std::invalid_argument("bad value for " + key + ": `" + value + "`");
  }
  return out;
}

std::map<std::string, KgContext> BuildContexts(const KgCopyModel& model,
                                               const std::map<std::string, LocalKG>& kgs) {
  std::map<std::string, KgContext> out;
  for (const auto& [team, kg] : kgs) out.emplace(team, model.PrepareKg(kg));
  return out;
}

std::vector<PreparedExample> PrepareAll(const KgCopyModel& model,
                                        const std::vector<TrainingExample>& examples,
                                        const std::map<std::string, KgContext>& contexts) {
  std::vector<PreparedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    auto it = contexts.find(ex.team_id);
    out.push_back(model.Prepare(ex, it == contexts.end() ? nullptr : &it->second));
  }
  return out;
}

int ArgMax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

void TrainConfig::Set(const std::string& key, const std::string& value) {
  if (key == "batch_size") batch_size = ParseNumber<int>(key, value);
  else if (key == "epochs") epochs = ParseNumber<int>(key, value);
  else if (key == "lr_encoder") lr_encoder = ParseNumber<double>(key, value);
  else if (key == "lr_decoder") lr_decoder = ParseNumber<double>(key, value);
  else if (key == "dropout_rnn") dropout_rnn = ParseNumber<double>(key, value);
  else if (key == "dropout_emb") dropout_emb = ParseNumber<double>(key, value);
  else if (key == "grad_clip_norm") grad_clip_norm = ParseNumber<double>(key, value);
  else if (key == "seed") seed = ParseNumber<uint64_t>(key, value);
  else if (key == "hidden") hidden = ParseNumber<int>(key, value);
  else if (key == "embed") embed = ParseNumber<int>(key, value);
  else if (key == "max_triples") max_triples = ParseNumber<int>(key, value);
  else if (key == "min_count") min_count = ParseNumber<int>(key, value);
  else if (key == "window") window = ParseNumber<int>(key, value);
  else if (key == "max_context_len") max_context_len = ParseNumber<int>(key, value);
  else if (key == "jaccard_threshold") jaccard_threshold = ParseNumber<double>(key, value);
  else if (key == "max_decode_len") max_decode_len = ParseNumber<int>(key, value);
  else if (key == "select_by") select_by = value;
  else if (key == "raw_mixture") raw_mixture = ParseBool(value);
  else if (key == "embeddings_path") embeddings_path = value;
  else if (key == "checkpoint_path") checkpoint_path = value;
  else if (key == "metrics_path") metrics_path = value;
  else if (key == "verbose") verbose = ParseBool(value);
  else throw std::invalid_argument("unknown config key: " + key);
}

std::map<std::string, std::string> TrainConfig::ToMap() const {
  auto num = [](double x) { return fmt::format("{}", x); };
  return {
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
      {"lr_encoder", num(lr_encoder)},
      {"lr_decoder", num(lr_decoder)},
      {"dropout_rnn", num(dropout_rnn)},
      {"dropout_emb", num(dropout_emb)},
      {"grad_clip_norm", num(grad_clip_norm)},
      {"seed", std::to_string(seed)},
      {"hidden", std::to_string(hidden)},
      {"embed", std::to_string(embed)},
      {"max_triples", std::to_string(max_triples)},
      {"min_count", std::to_string(min_count)},
      {"window", std::to_string(window)},
      {"max_context_len", std::to_string(max_context_len)},
      {"jaccard_threshold", num(jaccard_threshold)},
      {"max_decode_len", std::to_string(max_decode_len)},
      {"select_by", select_by},
      {"raw_mixture", raw_mixture ? "true" : "false"},
      {"embeddings_path", embeddings_path},
      {"checkpoint_path", checkpoint_path},
      {"metrics_path", metrics_path},
      {"verbose", verbose ? "true" : "false"},
  };
}

uint64_t TrainConfig::Hash() const {
  // Output paths and verbosity do not change the trained weights.
  uint64_t h = 14695981039346656037ull;
  for (const auto& [key, value] : ToMap()) {
    if (key == "checkpoint_path" || key == "metrics_path" || key == "verbose") continue;
    for (unsigned char c : key + "=" + value + "\n") {
      h ^= c;
      h *= 1099511628211ull;
    }
  }
  return h;
}

void TrainConfig::Validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(lr_encoder > 0) || !(lr_decoder > 0)) {
    throw std::invalid_argument("learning rates must be > 0");
  }
  if (dropout_rnn < 0 || dropout_rnn >= 1 || dropout_emb < 0 || dropout_emb >= 1) {
    throw std::invalid_argument("dropout rates must lie in [0, 1)");
  }
  if (!(grad_clip_norm > 0)) throw std::invalid_argument("grad_clip_norm must be > 0");
  if (hidden < 1 || embed < 1 || max_triples < 1) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (max_decode_len < 1) throw std::invalid_argument("max_decode_len must be >= 1");
  if (select_by != "entity_f1" && select_by != "bleu") {
    throw std::invalid_argument("select_by must be entity_f1 or bleu");
  }
}

TrainConfig ParseTrainConfig(const std::string& text) {
  TrainConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value");
    }
    config.Set(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
  return config;
}

TrainConfig LoadTrainConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseTrainConfig(buffer.str());
}

int Batch::PadCount() const {
  return static_cast<int>((context_mask.array() == 0).count() +
                          (target_mask.array() == 0).count());
}

std::vector<Batch> MakeBatches(const std::vector<TrainingExample>& examples, int batch_size,
                               uint64_t seed, bool bucket) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<int> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  if (bucket) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const auto& ea = examples[a];
      const auto& eb = examples[b];
      if (ea.target.size() != eb.target.size()) return ea.target.size() < eb.target.size();
      return ea.context_ids.size() < eb.context_ids.size();
    });
  }
  std::vector<Batch> batches;
  for (size_t start = 0; start < order.size(); start += batch_size) {
    Batch b;
    size_t end = std::min(order.size(), start + batch_size);
    b.indices.assign(order.begin() + start, order.begin() + end);
    size_t max_ctx = 0, max_tgt = 0;
    for (int i : b.indices) {
      max_ctx = std::max(max_ctx, examples[i].context_ids.size());
      max_tgt = std::max(max_tgt, examples[i].target.size());
    }
    const int rows = b.size();
    b.context = Eigen::MatrixXi::Constant(rows, max_ctx, Vocabulary::kPad);
    b.context_mask = Eigen::MatrixXi::Zero(rows, max_ctx);
    b.target_mask = Eigen::MatrixXi::Zero(rows, max_tgt);
    b.sentient_labels = Eigen::MatrixXi::Zero(rows, max_tgt);
    for (int r = 0; r < rows; ++r) {
      const auto& ex = examples[b.indices[r]];
      for (size_t t = 0; t < ex.context_ids.size(); ++t) {
        b.context(r, t) = ex.context_ids[t];
        b.context_mask(r, t) = 1;
      }
      auto target = ex.target;
      for (size_t t = 0; t < ex.target.size(); ++t) {
        b.target_mask(r, t) = 1;
        b.sentient_labels(r, t) = ex.sentient_labels[t];
      }
      target.resize(max_tgt, OutputToken::Word(Vocabulary::kPad));
      b.targets.push_back(std::move(target));
    }
    batches.push_back(std::move(b));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

TeacherForcedAccuracy MeasureTeacherForced(const KgCopyModel& model,
                                           const std::vector<TrainingExample>& examples,
                                           const std::map<std::string, LocalKG>& kgs) {
  auto contexts = BuildContexts(model, kgs);
  auto prepared = PrepareAll(model, examples, contexts);
  const int v = model.dims().vocab_size;
  TeacherForcedAccuracy acc;
  int token_ok = 0, gate_ok = 0;
  double vocab_sum = 0.0, sent_sum = 0.0;
  for (const auto& ex : prepared) {
    auto outputs = model.TeacherForce(ex);
    LossTerms terms = ComputeLoss(outputs, ex.target, ex.sentient_labels, v);
    vocab_sum += terms.vocab * terms.steps;
    sent_sum += terms.sentient * terms.steps;
    for (size_t t = 0; t < outputs.size(); ++t) {
      if (!ex.target[t].is_copy() && ex.target[t].index == Vocabulary::kPad) continue;
      token_ok += ArgMax(outputs[t].mixed) == ex.target[t].ExtendedId(v);
      gate_ok += (outputs[t].gate > 0.5 ? 1 : 0) == ex.sentient_labels[t];
      ++acc.steps;
    }
  }
  if (acc.steps > 0) {
    acc.token = static_cast<double>(token_ok) / acc.steps;
    acc.sentient = static_cast<double>(gate_ok) / acc.steps;
    acc.loss.vocab = vocab_sum / acc.steps;
    acc.loss.sentient = sent_sum / acc.steps;
    acc.loss.total = acc.loss.vocab + acc.loss.sentient;
    acc.loss.steps = acc.steps;
  }
  return acc;
}

void WriteMetricsCsvHeader(std::ostream& out) {
  out << "epoch,train_loss,L_vocab,L_sentient,valid_bleu,valid_entity_f1\n";
}

void WriteMetricsCsvRow(std::ostream& out, const EpochLog& row) {
  out << fmt::format("{},{:.9g},{:.9g},{:.9g},{:.6g},{:.6g}\n", row.epoch, row.train_loss,
                     row.vocab, row.sentient, row.valid_bleu, row.valid_entity_f1);
}

TrainResult Train(const TrainConfig& config, const std::vector<TrainingExample>& train,
                  const std::vector<TrainingExample>& valid,
                  const std::map<std::string, LocalKG>& kgs, const EmbeddingTable& table,
                  const EpochCallback& on_epoch) {
  config.Validate();
  if (train.empty()) throw std::invalid_argument("training split is empty");
  if (valid.empty()) throw std::invalid_argument("validation split is empty");
  if (table.dim() != config.embed) {
    throw std::invalid_argument("embedding dimension does not match config.embed");
  }

  ModelDims dims{table.vocab().size(), config.hidden, config.embed, config.max_triples};
  KgCopyModel model(InitializeParams(dims, table, config.seed), table);
  auto contexts = BuildContexts(model, kgs);
  auto prepared = PrepareAll(model, train, contexts);

  Adam adam(dims, AdamConfig{config.lr_encoder, config.lr_decoder});
  ModelParams grads = ModelParams::Zeros(dims);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ull);

  std::ofstream metrics;
  if (!config.metrics_path.empty()) {
    metrics.open(config.metrics_path);
    if (!metrics) throw std::runtime_error("cannot write " + config.metrics_path);
    WriteMetricsCsvHeader(metrics);
  }

  DecodeOptions decode_options;
  decode_options.raw_mixture = config.raw_mixture;

  TrainResult result{Checkpoint{model, config}, Checkpoint{model, config}, {}};
  double best_score = -1.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    auto batches = MakeBatches(train, config.batch_size, config.seed + epoch);
    double vocab_sum = 0.0, sent_sum = 0.0;
    int step_sum = 0;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const Batch& batch = batches[bi];
      int steps = 0;
      for (int idx : batch.indices) steps += static_cast<int>(train[idx].target.size());
      if (steps == 0) continue;
      grads.SetZero();
      const double weight = 1.0 / steps;
      LossSums sums;
      for (int idx : batch.indices) {
        LossSums s = model.ForwardBackward(prepared[idx], weight, &grads, &dropout_rng,
                                           config.dropout());
        sums.total += s.total;
        sums.vocab += s.vocab;
        sums.sentient += s.sentient;
        sums.steps += s.steps;
      }
      BatchLog log;
      log.epoch = epoch;
      log.batch = static_cast<int>(bi);
      log.vocab = sums.vocab / std::max(sums.steps, 1);
      log.sentient = sums.sentient / std::max(sums.steps, 1);
      log.total = sums.total / std::max(sums.steps, 1);
      if (!std::isfinite(log.total)) {
        throw TrainingError(epoch, static_cast<int>(bi), "non-finite loss");
      }
      log.grad_norm = ClipGradNorm(grads, config.grad_clip_norm);
      log.clipped_grad_norm = std::sqrt(grads.SquaredNorm());
      if (!std::isfinite(log.grad_norm)) {
        throw TrainingError(epoch, static_cast<int>(bi), "non-finite gradient");
      }
      adam.Step(model.mutable_params(), grads);
      result.history.batches.push_back(log);
      vocab_sum += sums.vocab;
      sent_sum += sums.sentient;
      step_sum += sums.steps;
    }
    if (!model.params().AllFinite()) {
      throw TrainingError(epoch, static_cast<int>(batches.size()) - 1,
                          "parameters became non-finite");
    }

    EpochLog row;
    row.epoch = epoch;
    row.vocab = vocab_sum / std::max(step_sum, 1);
    row.sentient = sent_sum / std::max(step_sum, 1);
    row.train_loss = row.vocab + row.sentient;
    EvalReport report = EvaluateExamples(
        "valid", valid, kgs, ModelGenerator(model, kgs, config.max_decode_len, decode_options));
    row.valid_bleu = report.bleu;
    row.valid_entity_f1 = report.entity_f1;
    result.history.epochs.push_back(row);
    if (metrics.is_open()) {
      WriteMetricsCsvRow(metrics, row);
      metrics.flush();
    }
    if (config.verbose) {
      std::cerr << fmt::format(
          "epoch {:3d}  loss {:.4f} (vocab {:.4f}, sentient {:.4f})  valid BLEU {:.2f}  "
          "entity-F1 {:.2f}\n",
          epoch, row.train_loss, row.vocab, row.sentient, row.valid_bleu, row.valid_entity_f1);
    }
    if (on_epoch) on_epoch(row);

    double score = config.select_by == "bleu" ? row.valid_bleu : row.valid_entity_f1;
    if (score > best_score) {
      best_score = score;
      result.best = Checkpoint{model, config, epoch, row.valid_entity_f1, row.valid_bleu};
      if (!config.checkpoint_path.empty()) SaveCheckpoint(result.best, config.checkpoint_path);
    }
  }
  const EpochLog& final_row = result.history.epochs.back();
  result.last =
      Checkpoint{model, config, final_row.epoch, final_row.valid_entity_f1, final_row.valid_bleu};
  return result;
}

}  // namespace kgcopy
