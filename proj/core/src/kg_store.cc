#include "kgcopy/kg_store.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "kgcopy/errors.h"
#include "kgcopy/text.h"

namespace kgcopy {
namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::string Trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\v\f");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\v\f");
  return s.substr(b, e - b + 1);
}

}  // namespace

LocalKG::LocalKG(std::string team_id, std::vector<Triple> triples)
    : team_id_(std::move(team_id)), triples_(std::move(triples)) {
  std::set<std::vector<std::string>> seen_entities;
  for (int p = 0; p < size(); ++p) {
    const Triple& t = triples_[p];
    subject_tokens_.push_back(Tokenize(t.subject));
    relation_tokens_.push_back(Tokenize(t.relation));
    object_tokens_.push_back(Tokenize(t.object));
    if (subject_tokens_.back().empty() || relation_tokens_.back().empty() ||
        object_tokens_.back().empty()) {
      throw std::invalid_argument("triple " + std::to_string(p) +
                                  " has a label without tokens");
    }
    object_index_[NormalizeText(t.object)].push_back(p);
    for (const auto* label : {&subject_tokens_.back(), &object_tokens_.back()}) {
      if (seen_entities.insert(*label).second) entity_labels_.push_back(*label);
    }
  }
}

const std::vector<int>& LocalKG::ObjectPositions(const std::string& label) const {
  static const std::vector<int> kNone;
  auto it = object_index_.find(NormalizeText(label));
  return it == object_index_.end() ? kNone : it->second;
}

KgStats LocalKG::Stats() const {
  std::set<std::string> entities;
  std::set<std::string> relations;
  for (const auto& t : triples_) {
    entities.insert(NormalizeText(t.subject));
    entities.insert(NormalizeText(t.object));
    relations.insert(NormalizeText(t.relation));
  }
  return KgStats{size(), static_cast<int>(entities.size()),
                 static_cast<int>(relations.size())};
}

LocalKG ParseTeamKg(std::istream& in, const std::string& source,
                    const std::string& team_id, int max_triples) {
  std::vector<Triple> triples;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (NormalizeText(line).empty()) continue;
    auto fields = SplitTabs(line);
    if (fields.size() != 3) {
      throw ParseError(source, std::to_string(line_no),
                       "expected 3 tab-separated fields, found " +
                           std::to_string(fields.size()));
    }
    Triple t;
    for (int i = 0; i < 3; ++i) {
      // Original casing is kept for display; matching uses NormalizeText.
      std::string value = Trim(fields[i]);
      if (NormalizeText(value).empty() || Tokenize(value).empty()) {
        throw ParseError(source, std::to_string(line_no),
                         "field " + std::to_string(i + 1) + " is empty");
      }
      (i == 0 ? t.subject : i == 1 ? t.relation : t.object) = std::move(value);
    }
    auto key = std::make_tuple(NormalizeText(t.subject), NormalizeText(t.relation),
                               NormalizeText(t.object));
    if (!seen.insert(key).second) continue;
    triples.push_back(std::move(t));
  }
  if (triples.empty()) throw EmptyKgError(source + ": knowledge graph is empty");
  if (static_cast<int>(triples.size()) > max_triples) {
    throw FormatError(source + ": " + std::to_string(triples.size()) +
                      " triples exceed the limit of " + std::to_string(max_triples));
  }
  return LocalKG(team_id, std::move(triples));
}

LocalKG LoadTeamKg(const std::string& path, const std::string& team_id,
                   int max_triples) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open knowledge graph " + path);
  return ParseTeamKg(in, path, team_id, max_triples);
}

std::map<std::string, LocalKG> LoadKgDirectory(const std::string& dir,
                                               int max_triples) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("knowledge graph directory not found: " + dir);
  }
  std::map<std::string, LocalKG> kgs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".tsv") continue;
    std::string team = entry.path().stem().string();
    kgs.emplace(team, LoadTeamKg(entry.path().string(), team, max_triples));
  }
  return kgs;
}

TripleEmbeddingMatrix EmbedTriples(const LocalKG& kg, const EmbeddingTable& table) {
  TripleEmbeddingMatrix out;
  out.rows = Eigen::MatrixXd::Zero(kg.size(), table.dim());
  for (int p = 0; p < kg.size(); ++p) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dim());
    int n = 0;
    for (const auto* tokens : {&kg.subject_tokens(p), &kg.relation_tokens(p)}) {
      for (const auto& tok : *tokens) {
        sum += table.Lookup(tok);
        ++n;
      }
    }
    out.rows.row(p) = (sum / n).transpose();
  }
  return out;
}

const std::string& ResolveObject(const LocalKG& kg, int position) {
  if (position < 0 || position >= kg.size()) {
    throw std::out_of_range("triple position " + std::to_string(position) +
                            " outside [0, " + std::to_string(kg.size()) + ")");
  }
  return kg.triple(position).object;
}

}  // namespace kgcopy
