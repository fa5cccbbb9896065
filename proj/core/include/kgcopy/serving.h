#ifndef KGCOPY_SERVING_H_
#define KGCOPY_SERVING_H_

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kgcopy/kg_store.h"
#include "kgcopy/model.h"

namespace kgcopy {

// [start, end) in Unicode code points of ChatResponse::text.
struct ChatSpan {
  int start = 0;
  int end = 0;
  std::string source;           // "vocab" or "kg"
  std::optional<int> triple;    // set for kg spans
};

struct ChatResponse {
  std::string text;
  std::vector<ChatSpan> spans;
  std::vector<double> gate_trace;
  bool truncated = false;  // the utterance exceeded max_utterance_tokens
};

struct ChatOptions {
  int window = 3;
  int max_context_len = 80;
  int max_decode_len = 30;
  int max_utterance_tokens = 80;
  DecodeOptions decode;
};

class UnknownTeamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ChatSession {
 public:
  ChatSession(std::string id, std::string team_id, int max_history);

  const std::string& id() const { return id_; }
  const std::string& team_id() const { return team_id_; }
  const std::deque<std::string>& history() const { return history_; }
  int max_history() const { return max_history_; }
  void Append(std::string utterance);

 private:
  std::string id_;
  std::string team_id_;
  std::deque<std::string> history_;
  int max_history_;
};

// Immutable once built; safe to share between threads.
class ChatEngine {
 public:
  ChatEngine(KgCopyModel model, std::map<std::string, LocalKG> kgs, ChatOptions options = {});
  ChatEngine(const ChatEngine&) = delete;
  ChatEngine& operator=(const ChatEngine&) = delete;

  const KgCopyModel& model() const { return model_; }
  const ChatOptions& options() const { return options_; }
  std::vector<std::string> teams() const;
  bool HasTeam(const std::string& team) const;

  // Throws UnknownTeamError unless the team has a KG or is "none".
  ChatSession NewSession(std::string id, const std::string& team) const;
  // Appends the utterance and the reply to the session history.
  ChatResponse Turn(ChatSession& session, const std::string& utterance) const;

 private:
  KgCopyModel model_;
  std::map<std::string, LocalKG> kgs_;
  std::map<std::string, KgContext> contexts_;
  ChatOptions options_;
};

// Builds the response text from decoded tokens; copy tokens show the original
// object label. Separator spaces belong to vocab spans.
ChatResponse RenderResponse(std::span<const OutputToken> tokens, const Vocabulary& vocab,
                            const LocalKG* kg);

std::string ChatResponseToJson(const ChatResponse& response);

// Thread-safe registry; turns within one session are serialized.
class SessionManager {
 public:
  explicit SessionManager(std::shared_ptr<const ChatEngine> engine);

  const ChatEngine& engine() const { return *engine_; }
  std::string Create(const std::string& team);
  // Throws std::out_of_range for an unknown session.
  ChatResponse Send(const std::string& session_id, const std::string& text);
  bool Remove(const std::string& session_id);
  size_t size() const;

 private:
  struct Entry {
    std::mutex mutex;
    ChatSession session;
    explicit Entry(ChatSession s) : session(std::move(s)) {}
  };

  std::shared_ptr<const ChatEngine> engine_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  unsigned long long next_id_ = 1;
};

}  // namespace kgcopy

#endif  // KGCOPY_SERVING_H_
