#include "kgcopy/serving.h"

#include <thread>

#include <gtest/gtest.h>

#include "json.hpp"
#include "kgcopy/corpus.h"
#include "kgcopy/text.h"
#include "test_util.h"

namespace kgcopy {
namespace {

using kgcopy::testing::RandomModel;
using kgcopy::testing::SampleKg;

Vocabulary ChatVocab() {
  return Vocabulary({"who", "is", "the", "captain", "of", "argentina", "?", "lionel", "messi",
                     "scaloni", "estadio", "monumental", "coach", "home", "ground", "."});
}

std::map<std::string, LocalKG> Kgs() { return {{"argentina", SampleKg()}}; }

// Spans must tile the text exactly and kg spans must carry the object label.
void ExpectTiled(const ChatResponse& r, const LocalKG* kg) {
  std::u32string text;
  int cp = 0;
  for (unsigned char c : r.text) cp += (c & 0xC0) != 0x80;
  int pos = 0;
  for (const auto& s : r.spans) {
    EXPECT_EQ(s.start, pos);
    EXPECT_LT(s.start, s.end);
    EXPECT_TRUE(s.source == "vocab" || s.source == "kg") << s.source;
    EXPECT_EQ(s.triple.has_value(), s.source == "kg");
    if (s.triple && kg != nullptr) {
      const std::string& label = ResolveObject(*kg, *s.triple);
      int len = 0;
      for (unsigned char c : label) len += (c & 0xC0) != 0x80;
      EXPECT_EQ(s.end - s.start, len);
    }
    pos = s.end;
  }
  EXPECT_EQ(pos, cp);
}

TEST(RenderResponse, WordsAndCopies) {
  Vocabulary vocab = ChatVocab();
  LocalKG kg = SampleKg();
  std::vector<OutputToken> toks{OutputToken::Word(vocab.Id("the")),
                                OutputToken::Word(vocab.Id("captain")),
                                OutputToken::Word(vocab.Id("is")), OutputToken::Copy(0),
                                OutputToken::Word(vocab.Id("."))};
  ChatResponse r = RenderResponse(toks, vocab, &kg);
  EXPECT_EQ(r.text, "the captain is lionel messi .");
  ASSERT_EQ(r.spans.size(), 5u);
  EXPECT_EQ(r.spans[3].start, 15);
  EXPECT_EQ(r.spans[3].end, 27);
  EXPECT_EQ(r.spans[3].source, "kg");
  EXPECT_EQ(r.spans[3].triple, 0);
  EXPECT_EQ(r.spans[4].start, 27);
  EXPECT_EQ(r.spans[4].end, 29);
  ExpectTiled(r, &kg);
}

TEST(RenderResponse, AdjacentCopiesGetAStandaloneSeparator) {
  Vocabulary vocab = ChatVocab();
  LocalKG kg = SampleKg();
  std::vector<OutputToken> toks{OutputToken::Copy(0), OutputToken::Copy(1)};
  ChatResponse r = RenderResponse(toks, vocab, &kg);
  EXPECT_EQ(r.text, "lionel messi lionel scaloni");
  ASSERT_EQ(r.spans.size(), 3u);
  EXPECT_EQ(r.spans[1].source, "vocab");
  EXPECT_EQ(r.spans[1].start, 12);
  EXPECT_EQ(r.spans[1].end, 13);
  ExpectTiled(r, &kg);
  EXPECT_TRUE(RenderResponse({}, vocab, &kg).spans.empty());
  EXPECT_THROW(RenderResponse(toks, vocab, nullptr), std::out_of_range);
}

TEST(RenderResponse, OffsetsCountCodePoints) {
  Vocabulary vocab = ChatVocab();
  LocalKG kg("germany", {{"germany", "top scorer", "thomas müller"}});
  std::vector<OutputToken> toks{OutputToken::Copy(0), OutputToken::Word(vocab.Id("."))};
  ChatResponse r = RenderResponse(toks, vocab, &kg);
  EXPECT_EQ(r.spans[0].end, 13);
  EXPECT_EQ(r.spans[1].start, 13);
  EXPECT_EQ(r.spans[1].end, 15);
  ExpectTiled(r, &kg);
}

TEST(ChatResponseJson, Shape) {
  ChatResponse r;
  r.text = "lionel messi";
  r.spans.push_back({0, 12, "kg", 0});
  r.gate_trace = {0.9, 0.1};
  auto j = nlohmann::json::parse(ChatResponseToJson(r));
  EXPECT_EQ(j["text"], "lionel messi");
  EXPECT_EQ(j["spans"][0]["triple"], 0);
  EXPECT_EQ(j["spans"][0]["source"], "kg");
  EXPECT_EQ(j["gate_trace"].size(), 2u);
  EXPECT_EQ(j["truncated"], false);
  r.spans[0] = {0, 12, "vocab", std::nullopt};
  EXPECT_TRUE(nlohmann::json::parse(ChatResponseToJson(r))["spans"][0]["triple"].is_null());
}

ChatEngine MakeEngine(ChatOptions options = {}) {
  return ChatEngine(RandomModel(ChatVocab(), 6, 8, 4, 21, 0.5), Kgs(), options);
}

TEST(ChatEngine, ForcedCopyProducesKgSpans) {
  ChatOptions options;
  options.max_decode_len = 3;
  options.decode.forced_gate = 1.0;
  ChatEngine engine = MakeEngine(options);
  ChatSession s = engine.NewSession("a", "argentina");
  ChatResponse r = engine.Turn(s, "who is the captain of argentina ?");
  ASSERT_EQ(r.gate_trace.size(), 3u);
  int kg_spans = 0;
  for (const auto& span : r.spans) kg_spans += span.source == "kg";
  EXPECT_EQ(kg_spans, 3);
  LocalKG kg = SampleKg();
  ExpectTiled(r, &kg);
}

TEST(ChatEngine, SingleTurnMatchesGreedyDecode) {
  ChatEngine engine = MakeEngine();
  ChatSession s = engine.NewSession("a", "argentina");
  const std::string utterance = "Who is the captain of Argentina?";
  ChatResponse r = engine.Turn(s, utterance);

  const KgCopyModel& model = engine.model();
  LocalKG kg = SampleKg();
  KgContext ctx = model.PrepareKg(kg);
  auto tokens = Tokenize(utterance);
  std::vector<std::string> history{JoinTokens(tokens)};
  auto context = EncodeContext(history, model.vocab(), 3, 80);
  DecodeResult d = model.GreedyDecode(context, model.MakeGateInputs(tokens, &ctx),
                                      ctx.copy_feed_ids, 30);
  ChatResponse expected = RenderResponse(d.tokens, model.vocab(), &kg);
  EXPECT_EQ(r.text, expected.text);
  EXPECT_EQ(r.gate_trace, d.gate_trace);
  ExpectTiled(r, &kg);
}

TEST(ChatEngine, DeterministicAndIsolatedSessions) {
  ChatEngine engine = MakeEngine();
  ChatSession a = engine.NewSession("a", "argentina");
  ChatSession b = engine.NewSession("b", "argentina");
  ChatSession c = engine.NewSession("c", "argentina");
  engine.Turn(a, "who is the coach ?");
  engine.Turn(a, "lionel scaloni is the coach");
  ChatResponse rb = engine.Turn(b, "who is the captain ?");
  ChatResponse rc = engine.Turn(c, "who is the captain ?");
  EXPECT_EQ(rb.text, rc.text);
  EXPECT_EQ(rb.gate_trace, rc.gate_trace);
  EXPECT_EQ(b.history(), c.history());
  EXPECT_EQ(a.history().size(), 4u);
}

TEST(ChatEngine, HistoryIsBoundedAndInputTruncated) {
  ChatOptions options;
  options.window = 2;
  options.max_utterance_tokens = 5;
  ChatEngine engine = MakeEngine(options);
  ChatSession s = engine.NewSession("a", "none");
  for (int i = 0; i < 10; ++i) engine.Turn(s, "who is the captain");
  EXPECT_EQ(s.history().size(), 4u);
  ChatResponse r = engine.Turn(s, "a b c d e f g");
  EXPECT_TRUE(r.truncated);
  EXPECT_FALSE(engine.Turn(s, "a b c d e").truncated);
  EXPECT_THROW(engine.Turn(s, "   "), std::invalid_argument);
}

TEST(ChatEngine, TeamsAndUnknownTeam) {
  ChatEngine engine = MakeEngine();
  EXPECT_EQ(engine.teams(), std::vector<std::string>{"argentina"});
  EXPECT_THROW(engine.NewSession("x", "atlantis"), UnknownTeamError);
  ChatSession none = engine.NewSession("y", "none");
  ChatResponse r = engine.Turn(none, "hello");
  for (const auto& span : r.spans) EXPECT_EQ(span.source, "vocab");
  for (double s : r.gate_trace) EXPECT_EQ(s, 0.0);
}

TEST(SessionManager, CreateSendRemove) {
  auto engine = std::make_shared<ChatEngine>(RandomModel(ChatVocab(), 6, 8, 4, 21, 0.5), Kgs());
  SessionManager sm(engine);
  std::string a = sm.Create("argentina");
  std::string b = sm.Create("none");
  EXPECT_EQ(a, "s-1");
  EXPECT_EQ(b, "s-2");
  EXPECT_EQ(sm.size(), 2u);
  EXPECT_THROW(sm.Create("atlantis"), UnknownTeamError);
  EXPECT_EQ(sm.size(), 2u);
  EXPECT_NO_THROW(sm.Send(a, "who is the captain ?"));
  EXPECT_THROW(sm.Send("s-99", "hi"), std::out_of_range);
  EXPECT_TRUE(sm.Remove(a));
  EXPECT_FALSE(sm.Remove(a));
  EXPECT_THROW(sm.Send(a, "hi"), std::out_of_range);
}

TEST(SessionManager, ConcurrentSessionsMatchSequential) {
  auto engine = std::make_shared<ChatEngine>(RandomModel(ChatVocab(), 6, 8, 4, 21, 0.5), Kgs());
  SessionManager sm(engine);
  const std::vector<std::string> turns{"who is the captain ?", "who is the coach ?",
                                       "home ground ?"};
  ChatSession ref = engine->NewSession("ref", "argentina");
  std::vector<std::string> expected;
  for (const auto& t : turns) expected.push_back(engine->Turn(ref, t).text);

  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(sm.Create("argentina"));
  std::vector<std::vector<std::string>> got(ids.size());
  std::vector<std::thread> threads;
  for (size_t i = 0; i < ids.size(); ++i) {
    threads.emplace_back([&, i] {
      for (const auto& t : turns) got[i].push_back(sm.Send(ids[i], t).text);
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& g : got) EXPECT_EQ(g, expected);
}

}  // namespace
}  // namespace kgcopy
