#include "kgcopy/synthetic.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace kgcopy {
namespace {

struct TeamFacts {
  const char* team;
  const char* objects[5];
};

constexpr const char* kRelations[5] = {"captain", "coach", "home ground", "nickname",
                                       "top scorer"};

constexpr TeamFacts kTeams[5] = {
    {"argentina",
     {"lionel messi", "lionel scaloni", "estadio monumental", "la albiceleste",
      "gabriel batistuta"}},
    {"brazil",
     {"marquinhos", "dorival junior", "maracana", "selecao", "pele"}},
    {"germany",
     {"joshua kimmich", "julian nagelsmann", "allianz arena", "die mannschaft",
      "miroslav klose"}},
    {"england",
     {"harry kane", "thomas tuchel", "wembley stadium", "three lions", "wayne rooney"}},
    {"spain",
     {"alvaro morata", "luis de la fuente", "santiago bernabeu", "la roja", "david villa"}},
};

constexpr const char* kTrainQuestions[] = {
    "who is the {rel} of {team} ?",
    "do you know the {rel} of {team} ?",
    "what about the {rel} of {team} ?",
};
constexpr const char* kHeldOutQuestions[] = {
    "tell me the {rel} of {team} .",
    "can you name the {rel} of {team} ?",
};
constexpr const char* kFollowUp = "who is their {rel} ?";
constexpr const char* kAnswer = "the {rel} is {obj} .";

constexpr const char* kChitChat[][2] = {
    {"i like this team", "they are a great team ."},
    {"hello there", "hi , how can i help ?"},
    {"thanks a lot", "you are welcome ."},
    {"who will win the next game ?", "i hope they win ."},
    {"that was a great match", "yes , it was fun to watch ."},
};

template <typename T, size_t N>
const T& Pick(const T (&items)[N], std::mt19937_64& rng) {
  return items[std::uniform_int_distribution<size_t>(0, N - 1)(rng)];
}

std::string Fill(const char* pattern, const std::string& rel, const std::string& team,
                 const std::string& obj = "") {
  return fmt::format(fmt::runtime(pattern), fmt::arg("rel", rel), fmt::arg("team", team),
                     fmt::arg("obj", obj));
}

Dialogue MakeDialogue(const std::string& id, const std::string& split, bool held_out,
                      std::mt19937_64& rng) {
  const TeamFacts& facts = Pick(kTeams, rng);
  Dialogue d;
  d.id = id;
  d.team_id = facts.team;
  d.split = split;
  const int exchanges = std::uniform_int_distribution<int>(2, 3)(rng);
  const int factoid_at = std::uniform_int_distribution<int>(0, exchanges - 1)(rng);
  bool team_mentioned = false;
  for (int e = 0; e < exchanges; ++e) {
    const bool factoid =
        e == factoid_at || std::uniform_int_distribution<int>(0, 2)(rng) == 0;
    if (!factoid) {
      const auto& pair = Pick(kChitChat, rng);
      d.turns.push_back({Speaker::kUser, pair[0]});
      d.turns.push_back({Speaker::kSystem, pair[1]});
      continue;
    }
    const int r = std::uniform_int_distribution<int>(0, 4)(rng);
    const std::string rel = kRelations[r];
    const char* question;
    if (team_mentioned && std::uniform_int_distribution<int>(0, 1)(rng) == 0) {
      question = kFollowUp;
    } else {
      question = held_out ? Pick(kHeldOutQuestions, rng) : Pick(kTrainQuestions, rng);
    }
    team_mentioned = true;
    d.turns.push_back({Speaker::kUser, Fill(question, rel, facts.team)});
    d.turns.push_back({Speaker::kSystem, Fill(kAnswer, rel, facts.team, facts.objects[r])});
  }
  return d;
}

}  // namespace

SyntheticCorpus MakeSyntheticCorpus(const SyntheticOptions& options) {
  if (options.train_dialogues < 0 || options.valid_dialogues < 0 ||
      options.test_dialogues < 0) {
    throw std::invalid_argument("dialogue counts must be non-negative");
  }
  SyntheticCorpus corpus;
  for (const auto& facts : kTeams) {
    std::vector<Triple> triples;
    for (int r = 0; r < 5; ++r) triples.push_back({facts.team, kRelations[r], facts.objects[r]});
    corpus.kgs.emplace(facts.team, LocalKG(facts.team, std::move(triples)));
  }
  std::mt19937_64 rng(options.seed);
  for (int i = 0; i < options.train_dialogues; ++i) {
    corpus.train.push_back(MakeDialogue(fmt::format("train-{:04d}", i), "train", false, rng));
  }
  for (int i = 0; i < options.valid_dialogues; ++i) {
    corpus.valid.push_back(MakeDialogue(fmt::format("valid-{:04d}", i), "valid", false, rng));
  }
  for (int i = 0; i < options.test_dialogues; ++i) {
    corpus.test.push_back(MakeDialogue(fmt::format("test-{:04d}", i), "test", true, rng));
  }
  return corpus;
}

void WriteSyntheticCorpus(const SyntheticCorpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "kg");
  fs::create_directories(fs::path(dir) / "data");
  for (const auto& [team, kg] : corpus.kgs) {
    std::ofstream out(fs::path(dir) / "kg" / (team + ".tsv"));
    for (const auto& t : kg.triples()) {
      out << t.subject << '\t' << t.relation << '\t' << t.object << '\n';
    }
  }
  auto write = [&](const std::vector<Dialogue>& dialogues, const std::string& split) {
    std::ofstream out(SplitPath((fs::path(dir) / "data").string(), split));
    if (!out) throw std::runtime_error("cannot write split " + split);
    for (const auto& d : dialogues) WriteDialogue(out, d);
  };
  write(corpus.train, "train");
  write(corpus.valid, "valid");
  write(corpus.test, "test");
}

}  // namespace kgcopy
