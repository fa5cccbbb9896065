#include "kgcopy/text.h"

#include <gtest/gtest.h>

namespace kgcopy {
namespace {

using Tokens = std::vector<std::string>;

TEST(NormalizeText, FoldsCaseAndComposes) {
  EXPECT_EQ(NormalizeText("Emirates STADIUM"), "emirates stadium");
  // "e" followed by a combining acute accent composes to U+00E9.
  EXPECT_EQ(NormalizeText("Pele\xCC\x81"), "pel\xC3\xA9");
  EXPECT_EQ(NormalizeText("Pel\xC3\xA9"), "pel\xC3\xA9");
}

TEST(Tokenize, SplitsPunctuationOff) {
  EXPECT_EQ(Tokenize("the home ground is Emirates Stadium."),
            (Tokens{"the", "home", "ground", "is", "emirates", "stadium", "."}));
  EXPECT_EQ(Tokenize("who is the captain?"), (Tokens{"who", "is", "the", "captain", "?"}));
  EXPECT_EQ(Tokenize("  hi ,  there!! "), (Tokens{"hi", ",", "there", "!", "!"}));
}

TEST(Tokenize, EmptyAndWhitespaceOnly) {
  EXPECT_TRUE(Tokenize("").empty());
  EXPECT_TRUE(Tokenize(" \t\n").empty());
}

TEST(Tokenize, IsIdempotentOnJoinedTokens) {
  for (const char* s : {"Arsenal F.C. won 3-1!", "who's the coach?", "M\xC3\xBCller, Thomas"}) {
    Tokens once = Tokenize(s);
    EXPECT_EQ(Tokenize(JoinTokens(once)), once) << s;
  }
}

TEST(ContainsSequence, FindsContiguousRuns) {
  Tokens hay{"a", "b", "c", "d"};
  EXPECT_TRUE(ContainsSequence(hay, Tokens{"b", "c"}));
  EXPECT_FALSE(ContainsSequence(hay, Tokens{"b", "d"}));
  EXPECT_FALSE(ContainsSequence(hay, Tokens{}));
  EXPECT_FALSE(ContainsSequence(Tokens{"a"}, Tokens{"a", "b"}));
}

}  // namespace
}  // namespace kgcopy
