#include "kgcopy/vocabulary.h"

#include <gtest/gtest.h>

#include "kgcopy/corpus.h"

namespace kgcopy {
namespace {

Dialogue Make(const std::string& user, const std::string& system) {
  return Dialogue{"d", "none", {{Speaker::kUser, user}, {Speaker::kSystem, system}}, "train"};
}

TEST(Vocabulary, ReservedIds) {
  Vocabulary v;
  EXPECT_EQ(v.size(), Vocabulary::kNumReserved);
  EXPECT_EQ(v.Token(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.Token(Vocabulary::kUnk), "<unk>");
  EXPECT_EQ(v.Token(Vocabulary::kSos), "<sos>");
  EXPECT_EQ(v.Token(Vocabulary::kEos), "<eos>");
  EXPECT_EQ(v.Token(Vocabulary::kSep), "<sep>");
  EXPECT_EQ(v.Id("never seen"), Vocabulary::kUnk);
}

TEST(Vocabulary, RejectsDuplicates) {
  EXPECT_THROW(Vocabulary({"a", "a"}), std::invalid_argument);
  EXPECT_THROW(Vocabulary({"<unk>"}), std::invalid_argument);
}

TEST(BuildVocabulary, HelloHello) {
  Vocabulary v = BuildVocabulary({Dialogue{"d", "none", {{Speaker::kUser, "hello hello"}}, "train"}});
  EXPECT_EQ(v.size(), Vocabulary::kNumReserved + 1);
  EXPECT_EQ(v.Token(Vocabulary::kNumReserved), "hello");
}

TEST(BuildVocabulary, CountThenLexicographicOrder) {
  Vocabulary v = BuildVocabulary({Make("b a c", "c b c")});
  // c: 3, b: 2, a: 1
  ASSERT_EQ(v.size(), Vocabulary::kNumReserved + 3);
  EXPECT_EQ(v.Token(5), "c");
  EXPECT_EQ(v.Token(6), "b");
  EXPECT_EQ(v.Token(7), "a");
  Vocabulary tie = BuildVocabulary({Make("zeta alpha", "mid")});
  EXPECT_EQ(tie.Token(5), "alpha");
  EXPECT_EQ(tie.Token(6), "mid");
  EXPECT_EQ(tie.Token(7), "zeta");
}

TEST(BuildVocabulary, MinCount) {
  Vocabulary v = BuildVocabulary({Make("a a b", "c")}, 2);
  EXPECT_EQ(v.size(), Vocabulary::kNumReserved + 1);
  EXPECT_TRUE(v.Contains("a"));
  EXPECT_FALSE(v.Contains("b"));
}

TEST(BuildVocabulary, DeterministicAndTrainOnly) {
  std::vector<Dialogue> train{Make("who is the captain ?", "messi is the captain ."),
                              Make("hi", "hello there")};
  Vocabulary a = BuildVocabulary(train);
  Vocabulary b = BuildVocabulary(train);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.Hash(), b.Hash());
  EXPECT_EQ(a.Id("scaloni"), Vocabulary::kUnk);
  EXPECT_NE(a.Hash(), BuildVocabulary({Make("hi", "there")}).Hash());
}

TEST(BuildVocabulary, EmptyInputThrows) {
  EXPECT_THROW(BuildVocabulary({}), std::invalid_argument);
}

}  // namespace
}  // namespace kgcopy
