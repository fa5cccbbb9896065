#include "kgcopy/evaluation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "json.hpp"
#include "kgcopy/text.h"

namespace kgcopy {
namespace {

constexpr int kMaxOrder = 4;

struct BleuStats {
  long long hyp_len = 0;
  long long ref_len = 0;
  long long matches[kMaxOrder] = {};
  long long candidates[kMaxOrder] = {};
};

void Accumulate(const TokenSequence& ref, const TokenSequence& hyp, BleuStats* stats) {
  stats->hyp_len += static_cast<long long>(hyp.size());
  stats->ref_len += static_cast<long long>(ref.size());
  for (int n = 1; n <= kMaxOrder; ++n) {
    std::map<TokenSequence, int> ref_counts;
    for (size_t i = 0; i + n <= ref.size(); ++i) {
      ++ref_counts[TokenSequence(ref.begin() + i, ref.begin() + i + n)];
    }
    for (size_t i = 0; i + n <= hyp.size(); ++i) {
      ++stats->candidates[n - 1];
      auto it = ref_counts.find(TokenSequence(hyp.begin() + i, hyp.begin() + i + n));
      if (it != ref_counts.end() && it->second > 0) {
        --it->second;  // clipped counts
        ++stats->matches[n - 1];
      }
    }
  }
}

double BleuFromStats(const BleuStats& s) {
  if (s.hyp_len == 0) return 0.0;
  double log_precision = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    double p = s.matches[n] > 0
                   ? static_cast<double>(s.matches[n]) / s.candidates[n]
                   : 1.0 / (s.candidates[n] + 1.0);
    log_precision += std::log(p) / kMaxOrder;
  }
  double bp = s.hyp_len > s.ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(s.ref_len) / s.hyp_len);
  return 100.0 * bp * std::exp(log_precision);
}

double FiniteOrZero(double x) { return std::isfinite(x) ? x : 0.0; }

}  // namespace

double CorpusBleu(std::span<const TokenSequence> references,
                  std::span<const TokenSequence> hypotheses) {
  if (references.size() != hypotheses.size()) {
    throw std::invalid_argument("BLEU needs aligned references and hypotheses");
  }
  if (references.empty()) throw std::invalid_argument("BLEU of an empty corpus");
  BleuStats stats;
  for (size_t i = 0; i < references.size(); ++i) {
    Accumulate(references[i], hypotheses[i], &stats);
  }
  return BleuFromStats(stats);
}

std::vector<std::string> EntitiesIn(std::span<const std::string> tokens, const LocalKG& kg) {
  std::set<std::string> found;
  for (const auto& label : kg.entity_token_labels()) {
    if (ContainsSequence(tokens, label)) found.insert(JoinTokens(label));
  }
  return {found.begin(), found.end()};
}

EntityF1Result EntityF1(std::span<const TokenSequence> references,
                        std::span<const TokenSequence> hypotheses,
                        std::span<const LocalKG* const> kgs) {
  if (references.size() != hypotheses.size() || references.size() != kgs.size()) {
    throw std::invalid_argument("entity F1 needs aligned inputs");
  }
  EntityF1Result r;
  for (size_t i = 0; i < references.size(); ++i) {
    if (kgs[i] == nullptr) continue;
    auto gold = EntitiesIn(references[i], *kgs[i]);
    if (gold.empty()) continue;
    auto predicted = EntitiesIn(hypotheses[i], *kgs[i]);
    std::vector<std::string> common;
    std::set_intersection(gold.begin(), gold.end(), predicted.begin(), predicted.end(),
                          std::back_inserter(common));
    r.true_positives += static_cast<int>(common.size());
    r.false_positives += static_cast<int>(predicted.size() - common.size());
    r.false_negatives += static_cast<int>(gold.size() - common.size());
    ++r.pairs_counted;
  }
  r.defined = r.pairs_counted > 0;
  if (!r.defined) return r;
  const double tp = r.true_positives;
  r.precision = tp + r.false_positives > 0 ? 100.0 * tp / (tp + r.false_positives) : 0.0;
  r.recall = 100.0 * tp / (tp + r.false_negatives);
  const double denom = 2 * tp + r.false_positives + r.false_negatives;
  r.f1 = denom > 0 ? 100.0 * 2 * tp / denom : 0.0;
  return r;
}

TokenSequence ResolveTokens(std::span<const OutputToken> tokens, const Vocabulary& vocab,
                            const LocalKG* kg) {
  TokenSequence out;
  for (const auto& t : tokens) {
    if (t.is_copy()) {
      if (kg == nullptr) throw std::out_of_range("copy token without a knowledge graph");
      ResolveObject(*kg, t.index);  // range check
      const auto& obj = kg->object_tokens(t.index);
      out.insert(out.end(), obj.begin(), obj.end());
    } else {
      out.push_back(vocab.Token(t.index));
    }
  }
  return out;
}

EvalReport EvaluateExamples(const std::string& split,
                            const std::vector<TrainingExample>& examples,
                            const std::map<std::string, LocalKG>& kgs,
                            const ResponseGenerator& generate) {
  EvalReport report;
  report.split = split;
  std::vector<TokenSequence> refs;
  std::vector<TokenSequence> hyps;
  std::vector<const LocalKG*> example_kgs;
  std::set<std::string> missing;
  for (const auto& ex : examples) {
    const LocalKG* kg = nullptr;
    if (auto it = kgs.find(ex.team_id); it != kgs.end()) {
      kg = &it->second;
    } else if (ex.team_id != kNoTeam) {
      missing.insert(ex.team_id);
    }
    refs.push_back(ex.reference_tokens);
    hyps.push_back(generate(ex, kg));
    example_kgs.push_back(kg);
  }
  report.teams_without_kg.assign(missing.begin(), missing.end());
  report.responses = static_cast<int>(examples.size());
  if (examples.empty()) {
    report.warnings.push_back("split has no system turns");
    return report;
  }

  report.bleu = CorpusBleu(refs, hyps);
  EntityF1Result f1 = EntityF1(refs, hyps, example_kgs);
  if (!f1.defined) report.warnings.push_back("no reference mentions a KG entity; entity F1 reported as 0");
  report.entity_f1 = FiniteOrZero(f1.f1);
  report.entity_precision = FiniteOrZero(f1.precision);
  report.entity_recall = FiniteOrZero(f1.recall);
  report.with_gold = f1.pairs_counted;
  report.without_gold = report.responses - report.with_gold;

  std::map<std::string, std::vector<size_t>> by_team;
  for (size_t i = 0; i < examples.size(); ++i) by_team[examples[i].team_id].push_back(i);
  for (const auto& [team, idx] : by_team) {
    std::vector<TokenSequence> r, h;
    std::vector<const LocalKG*> k;
    for (size_t i : idx) {
      r.push_back(refs[i]);
      h.push_back(hyps[i]);
      k.push_back(example_kgs[i]);
    }
    EntityF1Result tf = EntityF1(r, h, k);
    report.per_team[team] =
        TeamMetrics{CorpusBleu(r, h), tf.f1, static_cast<int>(idx.size()), tf.pairs_counted};
  }
  return report;
}

ResponseGenerator ModelGenerator(const KgCopyModel& model,
                                 const std::map<std::string, LocalKG>& kgs, int max_len,
                                 DecodeOptions options) {
  auto contexts = std::make_shared<std::map<std::string, KgContext>>();
  for (const auto& [team, kg] : kgs) contexts->emplace(team, model.PrepareKg(kg));
  return [&model, contexts, max_len, options](const TrainingExample& ex,
                                              const LocalKG* kg) -> TokenSequence {
    const KgContext* ctx = nullptr;
    if (kg != nullptr) {
      if (auto it = contexts->find(ex.team_id); it != contexts->end()) ctx = &it->second;
    }
    GateInputs gate = model.MakeGateInputs(ex.query_tokens, ctx);
    std::vector<int> feed = ctx ? ctx->copy_feed_ids : std::vector<int>{};
    if (ex.context_ids.empty()) return {};
    DecodeResult decoded = model.GreedyDecode(ex.context_ids, gate, feed, max_len, options);
    return ResolveTokens(decoded.tokens, model.vocab(), ctx ? ctx->kg : nullptr);
  };
}

std::string ReportToJson(const EvalReport& report) {
  nlohmann::json j;
  j["split"] = report.split;
  j["bleu"] = report.bleu;
  j["entity_f1"] = report.entity_f1;
  j["entity_precision"] = report.entity_precision;
  j["entity_recall"] = report.entity_recall;
  j["responses"] = report.responses;
  j["with_gold"] = report.with_gold;
  j["without_gold"] = report.without_gold;
  j["teams_without_kg"] = report.teams_without_kg;
  j["warnings"] = report.warnings;
  j["per_team"] = nlohmann::json::object();
  for (const auto& [team, m] : report.per_team) {
    j["per_team"][team] = {{"bleu", m.bleu},
                           {"entity_f1", m.entity_f1},
                           {"responses", m.responses},
                           {"with_gold", m.with_gold}};
  }
  return j.dump(2);
}

std::string FormatReportTable(const EvalReport& report) {
  std::string out;
  out += fmt::format("split: {}  responses: {}  with gold entities: {}\n", report.split,
                     report.responses, report.with_gold);
  out += fmt::format("{:<24} {:>8} {:>10} {:>10}\n", "team", "BLEU", "Entity-F1", "responses");
  for (const auto& [team, m] : report.per_team) {
    out += fmt::format("{:<24} {:>8.2f} {:>10.2f} {:>10}\n", team, m.bleu, m.entity_f1,
                       m.responses);
  }
  out += fmt::format("{:<24} {:>8.2f} {:>10.2f} {:>10}\n", "ALL", report.bleu,
                     report.entity_f1, report.responses);
  for (const auto& w : report.warnings) out += "warning: " + w + "\n";
  if (!report.teams_without_kg.empty()) {
    out += "teams without KG: " + JoinTokens(report.teams_without_kg, ", ") + "\n";
  }
  return out;
}

}  // namespace kgcopy
