#ifndef KGCOPY_KG_STORE_H_
#define KGCOPY_KG_STORE_H_

#include <istream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "kgcopy/embeddings.h"

namespace kgcopy {

inline constexpr int kDefaultMaxTriples = 256;

struct Triple {
  std::string subject;
  std::string relation;
  std::string object;

  bool operator==(const Triple&) const = default;
};

struct KgStats {
  int num_triples = 0;
  int num_entities = 0;  // distinct subjects and objects
  int num_relations = 0;
};

// The knowledge graph of a single team. Triple positions are the copy
// targets, so their order is the file order with duplicates dropped.
class LocalKG {
 public:
  LocalKG() = default;
  LocalKG(std::string team_id, std::vector<Triple> triples);

  const std::string& team_id() const { return team_id_; }
  int size() const { return static_cast<int>(triples_.size()); }
  bool empty() const { return triples_.empty(); }
  const std::vector<Triple>& triples() const { return triples_; }
  const Triple& triple(int position) const { return triples_.at(position); }

  const std::vector<std::string>& subject_tokens(int p) const { return subject_tokens_.at(p); }
  const std::vector<std::string>& relation_tokens(int p) const { return relation_tokens_.at(p); }
  const std::vector<std::string>& object_tokens(int p) const { return object_tokens_.at(p); }

  // Normalized object label -> ascending triple positions.
  const std::unordered_map<std::string, std::vector<int>>& object_index() const {
    return object_index_;
  }
  // Positions whose object matches `label` after normalization; empty if none.
  const std::vector<int>& ObjectPositions(const std::string& label) const;

  // Distinct tokenized subject and object labels, used for entity matching.
  const std::vector<std::vector<std::string>>& entity_token_labels() const {
    return entity_labels_;
  }

  KgStats Stats() const;

  bool operator==(const LocalKG& other) const {
    return team_id_ == other.team_id_ && triples_ == other.triples_;
  }

 private:
  std::string team_id_;
  std::vector<Triple> triples_;
  std::vector<std::vector<std::string>> subject_tokens_;
  std::vector<std::vector<std::string>> relation_tokens_;
  std::vector<std::vector<std::string>> object_tokens_;
  std::unordered_map<std::string, std::vector<int>> object_index_;
  std::vector<std::vector<std::string>> entity_labels_;
};

// Parses `subject<TAB>relation<TAB>object` lines. Blank lines are ignored.
// Throws ParseError naming the line for malformed records, EmptyKgError when
// no triple is present and FormatError when more than `max_triples` remain
// after deduplication.
LocalKG ParseTeamKg(std::istream& in, const std::string& source,
                    const std::string& team_id,
                    int max_triples = kDefaultMaxTriples);
LocalKG LoadTeamKg(const std::string& path, const std::string& team_id,
                   int max_triples = kDefaultMaxTriples);

// Loads every `<team>.tsv` in `dir`, keyed by team id.
std::map<std::string, LocalKG> LoadKgDirectory(const std::string& dir,
                                               int max_triples = kDefaultMaxTriples);

// Row i is the mean embedding over the subject and relation tokens of triple i.
struct TripleEmbeddingMatrix {
  Eigen::MatrixXd rows;  // k x d_emb

  int size() const { return static_cast<int>(rows.rows()); }
};

TripleEmbeddingMatrix EmbedTriples(const LocalKG& kg, const EmbeddingTable& table);

// Object label of the triple at `position`; throws std::out_of_range.
const std::string& ResolveObject(const LocalKG& kg, int position);

}  // namespace kgcopy

#endif  // KGCOPY_KG_STORE_H_
