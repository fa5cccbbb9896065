#ifndef KGCOPY_EVALUATION_H_
#define KGCOPY_EVALUATION_H_

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kgcopy/corpus.h"
#include "kgcopy/kg_store.h"
#include "kgcopy/model.h"

namespace kgcopy {

using TokenSequence = std::vector<std::string>;

// Corpus-level 4-gram BLEU on a 0-100 scale with brevity penalty. An n-gram
// order with no matches uses (0 + 1) / (candidates + 1). Throws
// std::invalid_argument for empty or misaligned input.
double CorpusBleu(std::span<const TokenSequence> references,
                  std::span<const TokenSequence> hypotheses);

// Entity labels of `kg` (subjects and objects) occurring in `tokens`, as a
// set of normalized label strings.
std::vector<std::string> EntitiesIn(std::span<const std::string> tokens, const LocalKG& kg);

struct EntityF1Result {
  double f1 = 0.0;  // percentage
  double precision = 0.0;
  double recall = 0.0;
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  int pairs_counted = 0;  // responses with a non-empty gold set
  bool defined = false;   // false when every gold set is empty
};

// Micro-averaged entity F1 over responses whose reference mentions at least
// one entity. A null KG means the pair is skipped.
EntityF1Result EntityF1(std::span<const TokenSequence> references,
                        std::span<const TokenSequence> hypotheses,
                        std::span<const LocalKG* const> kgs);

// Replaces copy(j) with the tokens of triple j's object.
TokenSequence ResolveTokens(std::span<const OutputToken> tokens, const Vocabulary& vocab,
                            const LocalKG* kg);

struct TeamMetrics {
  double bleu = 0.0;
  double entity_f1 = 0.0;
  int responses = 0;
  int with_gold = 0;
};

struct EvalReport {
  std::string split;
  double bleu = 0.0;
  double entity_f1 = 0.0;
  double entity_precision = 0.0;
  double entity_recall = 0.0;
  int responses = 0;
  int with_gold = 0;     // counted in entity F1
  int without_gold = 0;  // empty gold set, or team without a KG
  std::map<std::string, TeamMetrics> per_team;
  std::vector<std::string> teams_without_kg;
  std::vector<std::string> warnings;
};

// Produces response tokens (copy tokens already resolved) for one example.
using ResponseGenerator =
    std::function<TokenSequence(const TrainingExample& example, const LocalKG* kg)>;

EvalReport EvaluateExamples(const std::string& split,
                            const std::vector<TrainingExample>& examples,
                            const std::map<std::string, LocalKG>& kgs,
                            const ResponseGenerator& generate);

// Greedy decoding with `model`; KG contexts are built once per team.
ResponseGenerator ModelGenerator(const KgCopyModel& model,
                                 const std::map<std::string, LocalKG>& kgs,
                                 int max_len = 30, DecodeOptions options = {});

std::string ReportToJson(const EvalReport& report);
std::string FormatReportTable(const EvalReport& report);

}  // namespace kgcopy

#endif  // KGCOPY_EVALUATION_H_
