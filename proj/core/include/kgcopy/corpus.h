#ifndef KGCOPY_CORPUS_H_
#define KGCOPY_CORPUS_H_

#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kgcopy/kg_store.h"
#include "kgcopy/vocabulary.h"

namespace kgcopy {

enum class Speaker { kUser, kSystem };

struct Turn {
  Speaker speaker;
  std::string text;
};

struct Dialogue {
  std::string id;
  std::string team_id;  // "none" for conversations without a team
  std::vector<Turn> turns;
  std::string split;
};

inline constexpr const char* kNoTeam = "none";

// One element of a decoder target: a vocabulary word or copy(j), meaning
// "emit the object of triple j of the local KG".
struct OutputToken {
  enum class Kind { kWord, kCopy };
  Kind kind = Kind::kWord;
  int index = 0;  // vocabulary id or triple position

  static OutputToken Word(int id) { return {Kind::kWord, id}; }
  static OutputToken Copy(int position) { return {Kind::kCopy, position}; }
  bool is_copy() const { return kind == Kind::kCopy; }
  // Position in the extended output space [0, v) ++ [v, v + k).
  int ExtendedId(int vocab_size) const { return is_copy() ? vocab_size + index : index; }
  static OutputToken FromExtendedId(int id, int vocab_size) {
    return id >= vocab_size ? Copy(id - vocab_size) : Word(id);
  }

  bool operator==(const OutputToken&) const = default;
};

struct TrainingExample {
  std::string dialogue_id;
  int turn_index = 0;  // index of the system turn inside the dialogue
  std::string team_id;
  std::vector<int> context_ids;
  std::vector<std::string> query_tokens;  // most recent user utterance
  std::vector<OutputToken> target;        // terminated by EOS
  std::vector<int> sentient_labels;       // 1 exactly where target is a copy
  std::vector<std::string> reference_tokens;  // system utterance as spoken
};

struct LinkOptions {
  int window = 3;             // preceding utterances in the context
  int max_context_len = 80;   // tokens kept, most recent last
  double jaccard_threshold = 0.8;
};

// A target span linked to a triple position.
struct SpanMatch {
  int begin = 0;  // token offsets, end exclusive
  int end = 0;
  int position = 0;
  double score = 0.0;  // 1.0 for normalized exact matches
};

struct LinkRecord {
  std::string dialogue_id;
  int turn_index = 0;
  std::string span;
  int triple_position = 0;
  double score = 0.0;
};

// Parses one dialogue per JSON line. Blank lines are skipped.
std::vector<Dialogue> ParseDialogues(std::istream& in, const std::string& source,
                                     const std::string& split);
// The split name is the file stem, e.g. `train` for `data/train.jsonl`.
std::vector<Dialogue> LoadDialogues(const std::string& path);
std::string SplitPath(const std::string& data_dir, const std::string& split);

void WriteDialogue(std::ostream& out, const Dialogue& d);

// Vocabulary over all utterances of `train`, most frequent first with
// lexicographic tie-breaking.
Vocabulary BuildVocabulary(const std::vector<Dialogue>& train, int min_count = 1);

// Ids of the last `window` utterances joined by the separator token, cut to
// the final `max_len` ids.
std::vector<int> EncodeContext(std::span<const std::string> utterances,
                               const Vocabulary& vocab, int window,
                               int max_len = 80);

// Greedy left-to-right longest matching of KG object labels inside `tokens`.
// `query_tokens` breaks ties between triples that share an object label.
std::vector<SpanMatch> MatchObjectSpans(std::span<const std::string> tokens,
                                        const LocalKG& kg,
                                        std::span<const std::string> query_tokens,
                                        double jaccard_threshold = 0.8);

// One example per system turn. `kg` may be null for team-less dialogues.
std::vector<TrainingExample> LinkAnswers(const Dialogue& d, const LocalKG* kg,
                                         const Vocabulary& vocab,
                                         const LinkOptions& options = {},
                                         std::vector<LinkRecord>* audit = nullptr);

// Links every dialogue. Dialogues whose team has no KG are linked with no
// KG; their ids are appended to `missing_teams` when provided.
std::vector<TrainingExample> LinkCorpus(const std::vector<Dialogue>& dialogues,
                                        const std::map<std::string, LocalKG>& kgs,
                                        const Vocabulary& vocab,
                                        const LinkOptions& options = {},
                                        std::vector<LinkRecord>* audit = nullptr,
                                        std::vector<std::string>* missing_teams = nullptr);

void WriteLinkAudit(std::ostream& out, const std::vector<LinkRecord>& records);

// JSON Lines: one object per example, copy tokens as `v + j`.
void WriteExamples(std::ostream& out, const std::vector<TrainingExample>& examples,
                   int vocab_size);

}  // namespace kgcopy

#endif  // KGCOPY_CORPUS_H_
