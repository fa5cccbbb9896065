#ifndef KGCOPY_POS_TAGGER_H_
#define KGCOPY_POS_TAGGER_H_

#include <span>
#include <string>
#include <vector>

namespace kgcopy {

// Universal-dependencies style coarse tags.
enum class PosTag {
  kNoun,
  kPropn,
  kVerb,
  kAux,
  kAdj,
  kAdv,
  kPron,
  kDet,
  kAdp,
  kConj,
  kPart,
  kNum,
  kPunct,
  kIntj,
  kOther,
};

bool IsContentTag(PosTag tag);
const char* PosTagName(PosTag tag);

// Adapter point for external taggers: implement Tag() and pass the instance
// wherever a tagger is accepted.
class PosTagger {
 public:
  virtual ~PosTagger() = default;
  // Returns one tag per token. Tokens are lowercased.
  virtual std::vector<PosTag> Tag(std::span<const std::string> tokens) const = 0;
};

// Closed-class lexicon plus a short list of frequent verbs and adjectives.
// Anything else that is alphabetic is tagged as a noun, which errs towards
// keeping entity and relation words in the content average.
class LexiconTagger : public PosTagger {
 public:
  std::vector<PosTag> Tag(std::span<const std::string> tokens) const override;
  PosTag TagToken(const std::string& token) const;
};

const PosTagger& DefaultTagger();

}  // namespace kgcopy

#endif  // KGCOPY_POS_TAGGER_H_
