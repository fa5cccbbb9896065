#include "kgcopy/corpus.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "json.hpp"
#include "kgcopy/errors.h"
#include "kgcopy/text.h"

namespace kgcopy {
namespace {

using nlohmann::json;

Dialogue ParseDialogueRecord(const json& record, const std::string& source,
                             int line_no, const std::string& split) {
  std::string where = "line " + std::to_string(line_no);
  if (!record.is_object()) throw ParseError(source, where, "record is not an object");
  if (!record.contains("id") || !record["id"].is_string()) {
    throw ParseError(source, where, "missing string field `id`");
  }
  Dialogue d;
  d.id = record["id"].get<std::string>();
  d.split = split;
  where = d.id;
  if (!record.contains("team") || !record["team"].is_string()) {
    throw ParseError(source, where, "missing string field `team`");
  }
  d.team_id = record["team"].get<std::string>();
  if (!record.contains("turns") || !record["turns"].is_array()) {
    throw ParseError(source, where, "missing array field `turns`");
  }
  for (const auto& turn : record["turns"]) {
    if (!turn.is_object() || !turn.contains("speaker") || !turn.contains("text") ||
        !turn["speaker"].is_string() || !turn["text"].is_string()) {
      throw ParseError(source, where, "turn needs string `speaker` and `text`");
    }
    std::string speaker = turn["speaker"].get<std::string>();
    Turn t;
    if (speaker == "user") {
      t.speaker = Speaker::kUser;
    } else if (speaker == "system") {
      t.speaker = Speaker::kSystem;
    } else {
      throw ParseError(source, where, "unknown speaker `" + speaker + "`");
    }
    t.text = turn["text"].get<std::string>();
    if (NormalizeText(t.text).empty()) {
      throw ParseError(source, where, "empty utterance");
    }
    Speaker expected = d.turns.size() % 2 == 0 ? Speaker::kUser : Speaker::kSystem;
    if (t.speaker != expected) {
      throw ParseError(source, where, "turns must alternate starting with the user");
    }
    d.turns.push_back(std::move(t));
  }
  return d;
}

double Jaccard(std::span<const std::string> a, std::span<const std::string> b) {
  std::set<std::string> sa(a.begin(), a.end());
  std::set<std::string> sb(b.begin(), b.end());
  int inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  int uni = static_cast<int>(sa.size() + sb.size()) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

struct ObjectLabel {
  std::vector<std::string> tokens;
  std::vector<int> positions;
};

std::vector<ObjectLabel> GroupObjects(const LocalKG& kg) {
  std::vector<ObjectLabel> labels;
  std::map<std::vector<std::string>, size_t> index;
  for (int p = 0; p < kg.size(); ++p) {
    const auto& toks = kg.object_tokens(p);
    auto [it, inserted] = index.emplace(toks, labels.size());
    if (inserted) labels.push_back({toks, {}});
    labels[it->second].positions.push_back(p);
  }
  return labels;
}

int PickPosition(const LocalKG& kg, const std::vector<int>& positions,
                 std::span<const std::string> query_tokens) {
  std::unordered_set<std::string> query(query_tokens.begin(), query_tokens.end());
  int best = positions.front();
  int best_overlap = -1;
  for (int p : positions) {
    int overlap = 0;
    for (const auto* toks : {&kg.subject_tokens(p), &kg.relation_tokens(p)}) {
      for (const auto& t : *toks) overlap += query.count(t);
    }
    if (overlap > best_overlap) {  // strict: lowest position wins ties
      best_overlap = overlap;
      best = p;
    }
  }
  return best;
}

}  // namespace

std::vector<Dialogue> ParseDialogues(std::istream& in, const std::string& source,
                                     const std::string& split) {
  std::vector<Dialogue> dialogues;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (NormalizeText(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, "line " + std::to_string(line_no), e.what());
    }
    dialogues.push_back(ParseDialogueRecord(record, source, line_no, split));
  }
  return dialogues;
}

std::vector<Dialogue> LoadDialogues(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open conversations file " + path);
  return ParseDialogues(in, path, std::filesystem::path(path).stem().string());
}

std::string SplitPath(const std::string& data_dir, const std::string& split) {
  return (std::filesystem::path(data_dir) / (split + ".jsonl")).string();
}

void WriteDialogue(std::ostream& out, const Dialogue& d) {
  json record;
  record["id"] = d.id;
  record["team"] = d.team_id;
  record["turns"] = json::array();
  for (const auto& t : d.turns) {
    record["turns"].push_back(
        {{"speaker", t.speaker == Speaker::kUser ? "user" : "system"}, {"text", t.text}});
  }
  out << record.dump() << '\n';
}

Vocabulary BuildVocabulary(const std::vector<Dialogue>& train, int min_count) {
  if (train.empty()) throw std::invalid_argument("cannot build a vocabulary from no dialogues");
  std::unordered_map<std::string, int> counts;
  for (const auto& d : train) {
    for (const auto& t : d.turns) {
      for (auto& tok : Tokenize(t.text)) ++counts[tok];
    }
  }
  std::set<std::string_view> reserved(Vocabulary::ReservedTokens().begin(),
                                      Vocabulary::ReservedTokens().end());
  std::vector<std::pair<std::string, int>> entries;
  for (auto& [tok, n] : counts) {
    if (n >= min_count && !reserved.count(tok)) entries.emplace_back(tok, n);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(entries.size());
  for (auto& e : entries) tokens.push_back(std::move(e.first));
  return Vocabulary(std::move(tokens));
}

std::vector<int> EncodeContext(std::span<const std::string> utterances,
                               const Vocabulary& vocab, int window, int max_len) {
  if (window < 1) throw std::invalid_argument("context window must be >= 1");
  std::vector<int> ids;
  size_t first = utterances.size() > static_cast<size_t>(window)
                     ? utterances.size() - window
                     : 0;
  for (size_t i = first; i < utterances.size(); ++i) {
    if (i > first) ids.push_back(Vocabulary::kSep);
    for (const auto& tok : Tokenize(utterances[i])) ids.push_back(vocab.Id(tok));
  }
  if (max_len > 0 && static_cast<int>(ids.size()) > max_len) {
    ids.erase(ids.begin(), ids.end() - max_len);
  }
  return ids;
}

std::vector<SpanMatch> MatchObjectSpans(std::span<const std::string> tokens,
                                        const LocalKG& kg,
                                        std::span<const std::string> query_tokens,
                                        double jaccard_threshold) {
  std::vector<SpanMatch> matches;
  if (kg.empty()) return matches;
  const auto labels = GroupObjects(kg);
  size_t max_label = 0;
  for (const auto& l : labels) max_label = std::max(max_label, l.tokens.size());

  const int n = static_cast<int>(tokens.size());
  int i = 0;
  while (i < n) {
    const ObjectLabel* best = nullptr;
    int best_len = 0;
    double best_score = 0.0;
    for (const auto& label : labels) {
      int len = static_cast<int>(label.tokens.size());
      if (i + len > n || len <= best_len) continue;
      if (std::equal(label.tokens.begin(), label.tokens.end(), tokens.begin() + i)) {
        best = &label;
        best_len = len;
        best_score = 1.0;
      }
    }
    if (best == nullptr) {
      // Fuzzy fallback for multi-token labels only.
      for (const auto& label : labels) {
        int len = static_cast<int>(label.tokens.size());
        if (len < 2) continue;
        for (int span = std::max(2, len - 1); span <= len + 1 && i + span <= n; ++span) {
          double score = Jaccard(tokens.subspan(i, span), label.tokens);
          if (score < jaccard_threshold) continue;
          if (score > best_score || (score == best_score && span > best_len)) {
            best = &label;
            best_len = span;
            best_score = score;
          }
        }
      }
    }
    if (best == nullptr) {
      ++i;
      continue;
    }
    matches.push_back(SpanMatch{i, i + best_len,
                                PickPosition(kg, best->positions, query_tokens),
                                best_score});
    i += best_len;
  }
  return matches;
}

std::vector<TrainingExample> LinkAnswers(const Dialogue& d, const LocalKG* kg,
                                         const Vocabulary& vocab,
                                         const LinkOptions& options,
                                         std::vector<LinkRecord>* audit) {
  std::vector<TrainingExample> examples;
  std::vector<std::string> history;
  std::vector<std::string> last_user;
  for (size_t ti = 0; ti < d.turns.size(); ++ti) {
    const Turn& turn = d.turns[ti];
    if (turn.speaker == Speaker::kUser) {
      last_user = Tokenize(turn.text);
      history.push_back(turn.text);
      continue;
    }
    TrainingExample ex;
    ex.dialogue_id = d.id;
    ex.turn_index = static_cast<int>(ti);
    ex.team_id = d.team_id;
    ex.context_ids = EncodeContext(history, vocab, options.window, options.max_context_len);
    ex.query_tokens = last_user;
    ex.reference_tokens = Tokenize(turn.text);

    std::vector<SpanMatch> spans;
    if (kg != nullptr) {
      spans = MatchObjectSpans(ex.reference_tokens, *kg, ex.query_tokens,
                               options.jaccard_threshold);
    }
    size_t next_span = 0;
    const int n = static_cast<int>(ex.reference_tokens.size());
    for (int i = 0; i < n;) {
      if (next_span < spans.size() && spans[next_span].begin == i) {
        const SpanMatch& m = spans[next_span++];
        ex.target.push_back(OutputToken::Copy(m.position));
        ex.sentient_labels.push_back(1);
        if (audit != nullptr) {
          std::span<const std::string> toks(ex.reference_tokens);
          audit->push_back(LinkRecord{
              d.id, ex.turn_index, JoinTokens(toks.subspan(m.begin, m.end - m.begin)),
              m.position, m.score});
        }
        i = m.end;
        continue;
      }
      ex.target.push_back(OutputToken::Word(vocab.Id(ex.reference_tokens[i])));
      ex.sentient_labels.push_back(0);
      ++i;
    }
    ex.target.push_back(OutputToken::Word(Vocabulary::kEos));
    ex.sentient_labels.push_back(0);
    history.push_back(turn.text);
    examples.push_back(std::move(ex));
  }
  return examples;
}

std::vector<TrainingExample> LinkCorpus(const std::vector<Dialogue>& dialogues,
                                        const std::map<std::string, LocalKG>& kgs,
                                        const Vocabulary& vocab,
                                        const LinkOptions& options,
                                        std::vector<LinkRecord>* audit,
                                        std::vector<std::string>* missing_teams) {
  std::vector<TrainingExample> all;
  std::set<std::string> missing;
  for (const auto& d : dialogues) {
    const LocalKG* kg = nullptr;
    if (auto it = kgs.find(d.team_id); it != kgs.end()) {
      kg = &it->second;
    } else if (d.team_id != kNoTeam) {
      missing.insert(d.team_id);
    }
    auto examples = LinkAnswers(d, kg, vocab, options, audit);
    std::move(examples.begin(), examples.end(), std::back_inserter(all));
  }
  if (missing_teams != nullptr) {
    missing_teams->assign(missing.begin(), missing.end());
  }
  return all;
}

void WriteLinkAudit(std::ostream& out, const std::vector<LinkRecord>& records) {
  out << "dialogue_id\tturn_index\tspan\ttriple_position\tscore\n";
  for (const auto& r : records) {
    out << fmt::format("{}\t{}\t{}\t{}\t{:.4f}\n", r.dialogue_id, r.turn_index, r.span,
                       r.triple_position, r.score);
  }
}

void WriteExamples(std::ostream& out, const std::vector<TrainingExample>& examples,
                   int vocab_size) {
  for (const auto& ex : examples) {
    json record;
    record["dialogue_id"] = ex.dialogue_id;
    record["turn_index"] = ex.turn_index;
    record["team"] = ex.team_id;
    record["vocab_size"] = vocab_size;
    record["context_ids"] = ex.context_ids;
    record["query_tokens"] = ex.query_tokens;
    std::vector<int> target;
    for (const auto& t : ex.target) target.push_back(t.ExtendedId(vocab_size));
    record["target_ids"] = target;
    record["sentient_labels"] = ex.sentient_labels;
    record["reference"] = JoinTokens(ex.reference_tokens);
    out << record.dump() << '\n';
  }
}

}  // namespace kgcopy
