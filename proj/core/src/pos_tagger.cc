#include "kgcopy/pos_tagger.h"

#include <string_view>
#include <unordered_map>

namespace kgcopy {
namespace {

using Lexicon = std::unordered_map<std::string_view, PosTag>;

const Lexicon& BuildLexicon() {
  static const Lexicon* lexicon = [] {
    auto* lex = new Lexicon;
    auto add = [lex](PosTag tag, std::initializer_list<std::string_view> words) {
      for (auto w : words) lex->emplace(w, tag);
    };
    add(PosTag::kDet, {"the", "a", "an", "this", "that", "these", "those",
                       "some", "any", "each", "every", "no", "all", "both",
                       "either", "neither", "another", "which", "what",
                       "whose"});
    add(PosTag::kPron, {"i", "me", "my", "mine", "myself", "you", "your",
                        "yours", "yourself", "he", "him", "his", "himself",
                        "she", "her", "hers", "herself", "it", "its", "itself",
                        "we", "us", "our", "ours", "ourselves", "they", "them",
                        "their", "theirs", "themselves", "who", "whom",
                        "someone", "anyone", "everyone", "something",
                        "anything", "everything", "nothing", "one"});
    add(PosTag::kAux, {"is", "am", "are", "was", "were", "be", "been", "being",
                       "do", "does", "did", "have", "has", "had", "having",
                       "will", "would", "shall", "should", "can", "could",
                       "may", "might", "must", "'s", "'re", "'m", "'ve",
                       "'ll", "'d"});
    add(PosTag::kAdp, {"of", "in", "on", "at", "by", "for", "with", "about",
                       "against", "between", "into", "through", "during",
                       "before", "after", "above", "below", "to", "from",
                       "up", "down", "out", "off", "over", "under", "since",
                       "than", "per", "via", "as"});
    add(PosTag::kConj, {"and", "or", "but", "nor", "so", "yet", "if",
                        "because", "while", "although", "though", "whether",
                        "unless", "until", "when", "where", "why", "how"});
    add(PosTag::kPart, {"not", "n't", "s", "t", "'"});
    add(PosTag::kAdv, {"very", "really", "too", "also", "just", "only",
                       "still", "already", "ever", "never", "always",
                       "often", "sometimes", "now", "then", "here", "there",
                       "again", "well", "pretty", "quite", "much", "more",
                       "most", "less", "least", "even", "maybe", "perhaps",
                       "actually", "probably", "definitely", "currently",
                       "recently", "lately", "yes"});
    add(PosTag::kIntj, {"hi", "hello", "hey", "thanks", "thank", "ok",
                        "okay", "oh", "wow", "yeah", "bye", "goodbye",
                        "please", "sure"});
    add(PosTag::kAdj, {"good", "great", "bad", "best", "better", "worst",
                       "worse", "big", "small", "old", "new", "young",
                       "nice", "awesome", "amazing", "favorite",
                       "favourite", "strong", "weak", "happy", "sad",
                       "interesting", "many", "few", "other", "same",
                       "different", "last", "first", "next", "own",
                       "high", "low", "long", "short", "cool", "fine"});
    add(PosTag::kVerb, {"know", "knows", "knew", "known", "think", "thinks",
                        "thought", "like", "likes", "liked", "love", "loves",
                        "loved", "play", "plays", "played", "playing", "win",
                        "wins", "won", "winning", "lose", "loses", "lost",
                        "tell", "told", "say", "says", "said", "see", "saw",
                        "seen", "watch", "watched", "watching", "go", "goes",
                        "went", "gone", "going", "get", "gets", "got",
                        "make", "makes", "made", "coached",
                        "score", "scored", "scores", "support", "supports",
                        "believe", "want", "wants", "wanted", "hope",
                        "named", "called", "founded", "born", "lead", "leads",
                        "led", "manage", "manages", "managed", "hold",
                        "holds", "held", "feel", "feels", "felt", "follow",
                        "follows", "joined", "join", "become", "became"});
    return lex;
  }();
  return *lexicon;
}

bool HasAlpha(const std::string& token) {
  for (unsigned char c : token) {
    if (c >= 0x80 || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return true;
  }
  return false;
}

bool AllDigits(const std::string& token) {
  if (token.empty()) return false;
  for (unsigned char c : token) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

bool IsContentTag(PosTag tag) {
  return tag == PosTag::kNoun || tag == PosTag::kPropn || tag == PosTag::kVerb;
}

const char* PosTagName(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return "NOUN";
    case PosTag::kPropn: return "PROPN";
    case PosTag::kVerb: return "VERB";
    case PosTag::kAux: return "AUX";
    case PosTag::kAdj: return "ADJ";
    case PosTag::kAdv: return "ADV";
    case PosTag::kPron: return "PRON";
    case PosTag::kDet: return "DET";
    case PosTag::kAdp: return "ADP";
    case PosTag::kConj: return "CCONJ";
    case PosTag::kPart: return "PART";
    case PosTag::kNum: return "NUM";
    case PosTag::kPunct: return "PUNCT";
    case PosTag::kIntj: return "INTJ";
    case PosTag::kOther: return "X";
  }
  return "X";
}

PosTag LexiconTagger::TagToken(const std::string& token) const {
  const auto& lex = BuildLexicon();
  if (auto it = lex.find(token); it != lex.end()) return it->second;
  if (AllDigits(token)) return PosTag::kNum;
  if (!HasAlpha(token)) return PosTag::kPunct;
  return PosTag::kNoun;
}

std::vector<PosTag> LexiconTagger::Tag(std::span<const std::string> tokens) const {
  std::vector<PosTag> tags;
  tags.reserve(tokens.size());
  for (const auto& t : tokens) tags.push_back(TagToken(t));
  return tags;
}

const PosTagger& DefaultTagger() {
  static const LexiconTagger tagger;
  return tagger;
}

}  // namespace kgcopy
