#ifndef KGCOPY_SYNTHETIC_H_
#define KGCOPY_SYNTHETIC_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kgcopy/corpus.h"
#include "kgcopy/kg_store.h"

namespace kgcopy {

// Templated toy corpus: five teams with five triples each, factoid questions
// answered from the team KG and chit-chat exchanges with fixed replies. Test
// dialogues phrase their factoid questions with templates that never occur in
// train or valid.
struct SyntheticOptions {
  int train_dialogues = 140;
  int valid_dialogues = 20;
  int test_dialogues = 40;
  uint64_t seed = 7;
};

struct SyntheticCorpus {
  std::map<std::string, LocalKG> kgs;
  std::vector<Dialogue> train;
  std::vector<Dialogue> valid;
  std::vector<Dialogue> test;
};

SyntheticCorpus MakeSyntheticCorpus(const SyntheticOptions& options = {});

// Writes `<dir>/kg/<team>.tsv` and `<dir>/data/{train,valid,test}.jsonl`.
void WriteSyntheticCorpus(const SyntheticCorpus& corpus, const std::string& dir);

}  // namespace kgcopy

#endif  // KGCOPY_SYNTHETIC_H_
