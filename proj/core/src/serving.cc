#include "kgcopy/serving.h"

#include <stdexcept>

#include "json.hpp"
#include "kgcopy/corpus.h"
#include "kgcopy/evaluation.h"
#include "kgcopy/text.h"

namespace kgcopy {
namespace {

int CodePoints(const std::string& s) {
  int n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

}  // namespace

ChatSession::ChatSession(std::string id, std::string team_id, int max_history)
    : id_(std::move(id)), team_id_(std::move(team_id)), max_history_(max_history) {
  if (max_history_ < 1) throw std::invalid_argument("history bound must be >= 1");
}

void ChatSession::Append(std::string utterance) {
  history_.push_back(std::move(utterance));
  while (static_cast<int>(history_.size()) > max_history_) history_.pop_front();
}

ChatEngine::ChatEngine(KgCopyModel model, std::map<std::string, LocalKG> kgs,
                       ChatOptions options)
    : model_(std::move(model)), kgs_(std::move(kgs)), options_(options) {
  for (const auto& [team, kg] : kgs_) contexts_.emplace(team, model_.PrepareKg(kg));
}

std::vector<std::string> ChatEngine::teams() const {
  std::vector<std::string> out;
  for (const auto& [team, kg] : kgs_) out.push_back(team);
  return out;
}

bool ChatEngine::HasTeam(const std::string& team) const { return kgs_.count(team) > 0; }

ChatSession ChatEngine::NewSession(std::string id, const std::string& team) const {
  if (!HasTeam(team) && team != kNoTeam) throw UnknownTeamError("unknown team: " + team);
  return ChatSession(std::move(id), team, 2 * options_.window);
}

ChatResponse ChatEngine::Turn(ChatSession& session, const std::string& utterance) const {
  auto tokens = Tokenize(utterance);
  if (tokens.empty()) throw std::invalid_argument("empty utterance");
  bool truncated = false;
  if (static_cast<int>(tokens.size()) > options_.max_utterance_tokens) {
    tokens.resize(options_.max_utterance_tokens);
    truncated = true;
  }
  session.Append(JoinTokens(tokens));

  std::vector<std::string> history(session.history().begin(), session.history().end());
  auto context = EncodeContext(history, model_.vocab(), options_.window,
                               options_.max_context_len);
  const KgContext* kg = nullptr;
  if (auto it = contexts_.find(session.team_id()); it != contexts_.end()) kg = &it->second;
  GateInputs gate = model_.MakeGateInputs(tokens, kg);
  std::vector<int> feed = kg ? kg->copy_feed_ids : std::vector<int>{};
  DecodeResult decoded =
      model_.GreedyDecode(context, gate, feed, options_.max_decode_len, options_.decode);

  ChatResponse response = RenderResponse(decoded.tokens, model_.vocab(), kg ? kg->kg : nullptr);
  response.gate_trace = decoded.gate_trace;
  response.truncated = truncated;
  session.Append(JoinTokens(ResolveTokens(decoded.tokens, model_.vocab(), kg ? kg->kg : nullptr)));
  return response;
}

ChatResponse RenderResponse(std::span<const OutputToken> tokens, const Vocabulary& vocab,
                            const LocalKG* kg) {
  ChatResponse r;
  int pos = 0;
  bool pending_space = false;  // a separator not yet owned by any span
  for (size_t i = 0; i < tokens.size(); ++i) {
    const OutputToken& t = tokens[i];
    const bool last = i + 1 == tokens.size();
    if (t.is_copy()) {
      if (kg == nullptr) throw std::out_of_range("copy token without a knowledge graph");
      if (pending_space) {
        r.spans.push_back({pos - 1, pos, "vocab", std::nullopt});
        pending_space = false;
      }
      const std::string& label = ResolveObject(*kg, t.index);
      const int len = CodePoints(label);
      r.text += label;
      r.spans.push_back({pos, pos + len, "kg", t.index});
      pos += len;
      if (!last) {
        r.text += ' ';
        ++pos;
        pending_space = true;
      }
    } else {
      std::string word = vocab.Token(t.index);
      if (!last) word += ' ';
      const int len = CodePoints(word);
      r.text += word;
      r.spans.push_back({pending_space ? pos - 1 : pos, pos + len, "vocab", std::nullopt});
      pending_space = false;
      pos += len;
    }
  }
  return r;
}

std::string ChatResponseToJson(const ChatResponse& response) {
  nlohmann::json j;
  j["text"] = response.text;
  j["spans"] = nlohmann::json::array();
  for (const auto& s : response.spans) {
    nlohmann::json span = {{"start", s.start}, {"end", s.end}, {"source", s.source}};
    span["triple"] = s.triple ? nlohmann::json(*s.triple) : nlohmann::json(nullptr);
    j["spans"].push_back(span);
  }
  j["gate_trace"] = response.gate_trace;
  j["truncated"] = response.truncated;
  return j.dump();
}

SessionManager::SessionManager(std::shared_ptr<const ChatEngine> engine)
    : engine_(std::move(engine)) {
  if (!engine_) throw std::invalid_argument("null chat engine");
}

std::string SessionManager::Create(const std::string& team) {
  std::lock_guard lock(mutex_);
  std::string id = "s-" + std::to_string(next_id_);
  auto entry = std::make_shared<Entry>(engine_->NewSession(id, team));
  ++next_id_;
  sessions_.emplace(id, std::move(entry));
  return id;
}

ChatResponse SessionManager::Send(const std::string& session_id, const std::string& text) {
  std::shared_ptr<Entry> entry;
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw std::out_of_range("unknown session: " + session_id);
    entry = it->second;
  }
  std::lock_guard lock(entry->mutex);
  return engine_->Turn(entry->session, text);
}

bool SessionManager::Remove(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  return sessions_.erase(session_id) > 0;
}

size_t SessionManager::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace kgcopy
