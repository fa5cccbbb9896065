#include "kgcopy/kg_store.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "kgcopy/errors.h"
#include "kgcopy/text.h"
#include "test_util.h"

namespace kgcopy {
namespace {

LocalKG Parse(const std::string& text, int max_triples = kDefaultMaxTriples) {
  std::istringstream in(text);
  return ParseTeamKg(in, "test.tsv", "team", max_triples);
}

TEST(ParseTeamKg, ArsenalHomeGround) {
  LocalKG kg = Parse("Arsenal F.C.\thome venue\tEmirates Stadium\n");
  ASSERT_EQ(kg.size(), 1);
  EXPECT_EQ(kg.triple(0), (Triple{"Arsenal F.C.", "home venue", "Emirates Stadium"}));
  EXPECT_EQ(kg.ObjectPositions("emirates stadium"), std::vector<int>{0});
  EXPECT_EQ(ResolveObject(kg, 0), "Emirates Stadium");
}

TEST(ParseTeamKg, DuplicatesKeepFirstOccurrence) {
  LocalKG kg = Parse(
      "a\tr\tx\n"
      "b\tr\ty\n"
      "a\tr\tx\n"
      "A\tR\tX\n");
  ASSERT_EQ(kg.size(), 2);
  EXPECT_EQ(kg.triple(0).subject, "a");
  EXPECT_EQ(kg.triple(1).subject, "b");
}

TEST(ParseTeamKg, SkipsBlankLinesAndTrims) {
  LocalKG kg = Parse("\n  a \t r\t x  \n\n");
  ASSERT_EQ(kg.size(), 1);
  EXPECT_EQ(kg.triple(0), (Triple{"a", "r", "x"}));
}

TEST(ParseTeamKg, Errors) {
  EXPECT_THROW(Parse(""), EmptyKgError);
  EXPECT_THROW(Parse("\n\n"), EmptyKgError);
  try {
    Parse("a\tr\tx\nbroken line\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), "2");
  }
  EXPECT_THROW(Parse("a\t\tx\n"), ParseError);
  EXPECT_THROW(Parse("a\tb\tc\td\n"), ParseError);
  EXPECT_THROW(Parse("a\tr\tx\nb\tr\ty\n", 1), FormatError);
}

TEST(ResolveObject, Bounds) {
  LocalKG one("t", {{"s", "r", "only"}});
  EXPECT_EQ(ResolveObject(one, 0), "only");
  EXPECT_THROW(ResolveObject(one, 1), std::out_of_range);
  EXPECT_THROW(ResolveObject(one, -1), std::out_of_range);
}

TEST(LocalKG, ObjectIndexRoundTrip) {
  LocalKG kg("t", {{"s1", "r", "Shared Name"}, {"s2", "r", "other"}, {"s3", "q", "shared name"}});
  for (int p = 0; p < kg.size(); ++p) {
    const auto& positions = kg.object_index().at(JoinTokens(kg.object_tokens(p)));
    EXPECT_NE(std::find(positions.begin(), positions.end(), p), positions.end());
  }
  EXPECT_EQ(kg.ObjectPositions("shared name"), (std::vector<int>{0, 2}));
  EXPECT_TRUE(kg.ObjectPositions("missing").empty());
}

TEST(LocalKG, Stats) {
  KgStats s = kgcopy::testing::SampleKg().Stats();
  EXPECT_EQ(s.num_triples, 3);
  EXPECT_EQ(s.num_entities, 4);
  EXPECT_EQ(s.num_relations, 3);
}

TEST(LoadTeamKg, SameFileTwiceIsEqual) {
  auto dir = kgcopy::testing::TempDir("kg");
  {
    std::ofstream out(dir / "arsenal.tsv");
    out << "Arsenal F.C.\thome venue\tEmirates Stadium\nArsenal F.C.\tcoach\tMikel Arteta\n";
    std::ofstream ignored(dir / "notes.txt");
    ignored << "not a kg\n";
  }
  LocalKG a = LoadTeamKg((dir / "arsenal.tsv").string(), "arsenal");
  LocalKG b = LoadTeamKg((dir / "arsenal.tsv").string(), "arsenal");
  EXPECT_EQ(a, b);
  auto all = LoadKgDirectory(dir.string());
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all.at("arsenal"), a);
  EXPECT_THROW(LoadTeamKg((dir / "missing.tsv").string(), "missing"), std::runtime_error);
  EXPECT_THROW(LoadKgDirectory((dir / "nope").string()), std::runtime_error);
  std::filesystem::remove_all(dir);
}

class EmbedTriplesTest : public ::testing::Test {
 protected:
  EmbedTriplesTest() : vocab_({"arsenal", "coach", "captain", "home", "ground", "f", "c"}) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(vocab_.size(), 3);
    for (int i = Vocabulary::kNumReserved; i < vocab_.size(); ++i) {
      m.row(i) << i, 2.0 * i - 7, 1.0 / i;
    }
    table_ = std::make_unique<EmbeddingTable>(vocab_, m);
  }

  Eigen::VectorXd Vec(const std::string& w) const { return table_->Lookup(w); }

  Vocabulary vocab_;
  std::unique_ptr<EmbeddingTable> table_;
};

TEST_F(EmbedTriplesTest, TwoTokenMean) {
  LocalKG kg("t", {{"arsenal", "coach", "mikel arteta"}});
  auto rows = EmbedTriples(kg, *table_).rows;
  ASSERT_EQ(rows.rows(), 1);
  Eigen::VectorXd expected = (Vec("arsenal") + Vec("coach")) / 2.0;
  EXPECT_TRUE(rows.row(0).transpose().isApprox(expected, 1e-12));
}

TEST_F(EmbedTriplesTest, MultiTokenMeanOracle) {
  LocalKG kg("t", {{"Arsenal F.C.", "home ground", "Emirates Stadium"}});
  auto rows = EmbedTriples(kg, *table_).rows;
  // Subject tokens: arsenal f . c . ; relation tokens: home ground.
  std::vector<std::string> tokens{"arsenal", "f", ".", "c", ".", "home", "ground"};
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  for (const auto& t : tokens) {
    int id = vocab_.Contains(t) ? vocab_.Id(t) : Vocabulary::kUnk;
    for (int c = 0; c < 3; ++c) sum(c) += table_->vectors()(id, c);
  }
  Eigen::VectorXd expected = sum / static_cast<double>(tokens.size());
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(rows(0, c), expected(c), 1e-12);
}

TEST_F(EmbedTriplesTest, SharedSubjectRelationGivesIdenticalRows) {
  LocalKG kg("t", {{"arsenal", "captain", "x"}, {"arsenal", "captain", "y"}});
  auto rows = EmbedTriples(kg, *table_).rows;
  EXPECT_EQ(rows.row(0), rows.row(1));
  EXPECT_TRUE(rows.allFinite());
}

TEST_F(EmbedTriplesTest, PermutationEquivariant) {
  std::vector<Triple> triples{{"arsenal", "coach", "a"},
                              {"home", "ground", "b"},
                              {"c", "captain", "d"},
                              {"f", "home", "e"}};
  std::vector<int> perm{2, 0, 3, 1};
  std::vector<Triple> permuted;
  for (int i : perm) permuted.push_back(triples[i]);
  auto a = EmbedTriples(LocalKG("t", triples), *table_).rows;
  auto b = EmbedTriples(LocalKG("t", permuted), *table_).rows;
  for (size_t r = 0; r < perm.size(); ++r) EXPECT_EQ(b.row(r), a.row(perm[r]));
}

}  // namespace
}  // namespace kgcopy
