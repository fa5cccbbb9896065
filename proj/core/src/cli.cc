#include "kgcopy/cli.h"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "kgcopy/checkpoint.h"
#include "kgcopy/corpus.h"
#include "kgcopy/evaluation.h"
#include "kgcopy/http_server.h"
#include "kgcopy/serving.h"
#include "kgcopy/text.h"
#include "kgcopy/training.h"

namespace kgcopy {
namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::string checkpoint;
  std::string kg_dir = "kg";
  std::string data_dir = "data";
  std::string split;
  std::string team = kNoTeam;
  std::string host = "127.0.0.1";
  std::string out;
  int port = 8080;
  std::optional<uint64_t> seed;
};

TrainConfig ResolveConfig(const Flags& f) {
  TrainConfig config = f.config.empty() ? TrainConfig{} : LoadTrainConfig(f.config);
  if (f.seed) config.seed = *f.seed;
  if (!f.checkpoint.empty()) config.checkpoint_path = f.checkpoint;
  config.Validate();
  return config;
}

std::vector<Dialogue> LoadSplit(const Flags& f, const std::string& split) {
  return LoadDialogues(SplitPath(f.data_dir, split));
}

std::vector<TrainingExample> Link(const std::vector<Dialogue>& dialogues,
                                  const std::map<std::string, LocalKG>& kgs,
                                  const Vocabulary& vocab, const LinkOptions& options,
                                  std::ostream& err, std::vector<LinkRecord>* audit = nullptr) {
  std::vector<std::string> missing;
  auto examples = LinkCorpus(dialogues, kgs, vocab, options, audit, &missing);
  if (!missing.empty()) {
    err << "warning: no KG for teams: " << JoinTokens(missing, ", ") << "\n";
  }
  return examples;
}

int Preprocess(const Flags& f, std::ostream& out, std::ostream& err) {
  TrainConfig config = ResolveConfig(f);
  auto kgs = LoadKgDirectory(f.kg_dir, config.max_triples);
  auto train = LoadSplit(f, "train");
  Vocabulary vocab = BuildVocabulary(train, config.min_count);
  const std::string out_dir = f.out.empty() ? f.data_dir : f.out;
  fs::create_directories(out_dir);

  std::vector<std::string> splits;
  if (!f.split.empty()) {
    splits = {f.split};
  } else {
    for (const char* s : {"train", "valid", "test"}) {
      if (fs::exists(SplitPath(f.data_dir, s))) splits.push_back(s);
    }
  }
  for (const auto& split : splits) {
    auto dialogues = split == "train" ? train : LoadSplit(f, split);
    std::vector<LinkRecord> audit;
    auto examples = Link(dialogues, kgs, vocab, config.link_options(), err, &audit);
    std::ofstream ex_out(fs::path(out_dir) / (split + ".examples.jsonl"));
    WriteExamples(ex_out, examples, vocab.size());
    std::ofstream audit_out(fs::path(out_dir) / (split + ".links.tsv"));
    WriteLinkAudit(audit_out, audit);
    int system_turns = 0;
    for (const auto& d : dialogues) {
      for (const auto& t : d.turns) system_turns += t.speaker == Speaker::kSystem;
    }
    out << fmt::format("{}: {} dialogues, {} system turns, {} examples, {} links\n", split,
                       dialogues.size(), system_turns, examples.size(), audit.size());
  }
  std::ofstream vocab_out(fs::path(out_dir) / "vocab.txt");
  for (int i = 0; i < vocab.size(); ++i) vocab_out << vocab.Token(i) << "\n";
  out << fmt::format("vocabulary: {} tokens (hash {:016x})\n", vocab.size(), vocab.Hash());
  return 0;
}

int RunTrain(const Flags& f, std::ostream& out, std::ostream& err) {
  TrainConfig config = ResolveConfig(f);
  if (config.checkpoint_path.empty()) config.checkpoint_path = "kgcopy.ckpt";
  auto kgs = LoadKgDirectory(f.kg_dir, config.max_triples);
  auto train_dialogues = LoadSplit(f, "train");
  Vocabulary vocab = BuildVocabulary(train_dialogues, config.min_count);
  EmbeddingTable table = config.embeddings_path.empty()
                             ? RandomEmbeddings(vocab, config.embed)
                             : LoadPretrained(config.embeddings_path, vocab, config.embed);
  auto train = Link(train_dialogues, kgs, vocab, config.link_options(), err);
  auto valid = Link(LoadSplit(f, "valid"), kgs, vocab, config.link_options(), err);
  TrainResult result = Train(config, train, valid, kgs, table, [&](const EpochLog& row) {
    out << fmt::format("epoch {} loss {:.4f} vocab {:.4f} sentient {:.4f} bleu {:.2f} f1 {:.2f}\n",
                       row.epoch, row.train_loss, row.vocab, row.sentient, row.valid_bleu,
                       row.valid_entity_f1);
  });
  out << fmt::format("best epoch {}: valid BLEU {:.2f}, entity-F1 {:.2f}; saved {}\n",
                     result.best.epoch, result.best.valid_bleu, result.best.valid_entity_f1,
                     config.checkpoint_path);
  return 0;
}

int Evaluate(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.checkpoint.empty()) throw CLI::ValidationError("--checkpoint is required");
  Checkpoint ckpt = LoadCheckpoint(f.checkpoint);
  const TrainConfig& config = ckpt.config;
  if (fs::exists(SplitPath(f.data_dir, "train"))) {
    Vocabulary rebuilt = BuildVocabulary(LoadSplit(f, "train"), config.min_count);
    if (rebuilt.Hash() != ckpt.model.vocab().Hash()) {
      err << "error: vocabulary of " << f.data_dir << "/train does not match the checkpoint\n";
      return 1;
    }
  }
  auto kgs = LoadKgDirectory(f.kg_dir, config.max_triples);
  const std::string split = f.split.empty() ? "test" : f.split;
  auto examples = Link(LoadSplit(f, split), kgs, ckpt.model.vocab(), config.link_options(), err);
  DecodeOptions options;
  options.raw_mixture = config.raw_mixture;
  EvalReport report = EvaluateExamples(
      split, examples, kgs, ModelGenerator(ckpt.model, kgs, config.max_decode_len, options));
  out << FormatReportTable(report);
  const std::string json_path = f.out.empty() ? split + ".eval.json" : f.out;
  std::ofstream json(json_path);
  json << ReportToJson(report) << "\n";
  return 0;
}

std::unique_ptr<ChatEngine> MakeEngine(const Flags& f) {
  if (f.checkpoint.empty()) throw CLI::ValidationError("--checkpoint is required");
  Checkpoint ckpt = LoadCheckpoint(f.checkpoint);
  ChatOptions options;
  options.window = ckpt.config.window;
  options.max_context_len = ckpt.config.max_context_len;
  options.max_decode_len = ckpt.config.max_decode_len;
  options.decode.raw_mixture = ckpt.config.raw_mixture;
  return std::make_unique<ChatEngine>(std::move(ckpt.model),
                                      LoadKgDirectory(f.kg_dir, ckpt.config.max_triples),
                                      options);
}

std::string Highlight(const ChatResponse& r) {
  std::string out;
  std::vector<int> offsets;  // byte offset of each code point
  for (size_t i = 0; i < r.text.size(); ++i) {
    if ((static_cast<unsigned char>(r.text[i]) & 0xC0) != 0x80) offsets.push_back(i);
  }
  offsets.push_back(static_cast<int>(r.text.size()));
  for (const auto& s : r.spans) {
    std::string piece = r.text.substr(offsets[s.start], offsets[s.end] - offsets[s.start]);
    out += s.source == "kg" ? "[" + piece + "]" : piece;
  }
  return out;
}

int Chat(const Flags& f, std::istream& in, std::ostream& out) {
  auto engine = MakeEngine(f);
  ChatSession session = engine->NewSession("cli", f.team);
  out << "team: " << f.team << " (empty line or EOF quits)\n> " << std::flush;
  std::string line;
  while (std::getline(in, line) && !Tokenize(line).empty()) {
    ChatResponse r = engine->Turn(session, line);
    out << Highlight(r) << (r.truncated ? "  (input truncated)" : "") << "\n> " << std::flush;
  }
  out << "\n";
  return 0;
}

HttpServer* g_server = nullptr;

int Serve(const Flags& f, std::ostream& out) {
  std::shared_ptr<const ChatEngine> engine = MakeEngine(f);
  auto sessions = std::make_shared<SessionManager>(engine);
  HttpServer server(sessions);
  int port = server.Bind(f.host, f.port);
  out << fmt::format("serving {} teams on http://{}:{}\n", engine->teams().size(), f.host, port)
      << std::flush;
  g_server = &server;
  auto stop = [](int) {
    if (g_server != nullptr) g_server->Stop();
  };
  std::signal(SIGINT, stop);
  std::signal(SIGTERM, stop);
  server.Listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"KG-grounded dialogue generation with a copy mechanism", "kgcopy"};
  app.require_subcommand(1);
  Flags f;
  uint64_t seed = 0;

  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "key=value training config")->check(CLI::ExistingFile);
    sub->add_option("--kg-dir", f.kg_dir, "directory of <team>.tsv files");
    sub->add_option("--data-dir", f.data_dir, "directory of <split>.jsonl files");
  };
  auto* preprocess = app.add_subcommand("preprocess", "link answers to KG triples");
  add_data(preprocess);
  preprocess->add_option("--split", f.split, "only this split");
  preprocess->add_option("--out", f.out, "output directory (default: --data-dir)");

  auto* train = app.add_subcommand("train", "train a model");
  add_data(train);
  train->add_option("--checkpoint", f.checkpoint, "where to save the best checkpoint");
  auto* seed_opt = train->add_option("--seed", seed, "random seed");

  auto* evaluate = app.add_subcommand("evaluate", "report BLEU and entity F1");
  evaluate->add_option("--checkpoint", f.checkpoint)->required();
  evaluate->add_option("--kg-dir", f.kg_dir);
  evaluate->add_option("--data-dir", f.data_dir);
  evaluate->add_option("--split", f.split, "default: test");
  evaluate->add_option("--out", f.out, "JSON report path");

  auto* chat = app.add_subcommand("chat", "interactive terminal chat");
  chat->add_option("--checkpoint", f.checkpoint)->required();
  chat->add_option("--kg-dir", f.kg_dir);
  chat->add_option("--team", f.team);

  auto* serve = app.add_subcommand("serve", "HTTP chat API");
  serve->add_option("--checkpoint", f.checkpoint)->required();
  serve->add_option("--kg-dir", f.kg_dir);
  serve->add_option("--host", f.host);
  serve->add_option("--port", f.port)->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }
  if (seed_opt->count() > 0) f.seed = seed;

  try {
    if (preprocess->parsed()) return Preprocess(f, out, err);
    if (train->parsed()) return RunTrain(f, out, err);
    if (evaluate->parsed()) return Evaluate(f, out, err);
    if (chat->parsed()) return Chat(f, in, out);
    if (serve->parsed()) return Serve(f, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace kgcopy
