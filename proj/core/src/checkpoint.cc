#include "kgcopy/checkpoint.h"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "kgcopy/errors.h"

namespace kgcopy {
namespace {

constexpr char kMagic[8] = {'K', 'G', 'C', 'O', 'P', 'Y', 'C', 'K'};

template <typename T>
void WritePod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadPod(std::istream& in, const std::string& source) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw FormatError(source + ": truncated checkpoint");
  }
  return value;
}

void ReadDoubles(std::istream& in, double* data, Eigen::Index n, const std::string& source) {
  const auto bytes = static_cast<std::streamsize>(n * sizeof(double));
  if (!in.read(reinterpret_cast<char*>(data), bytes)) {
    throw FormatError(source + ": truncated checkpoint body");
  }
}

}  // namespace

void WriteCheckpoint(std::ostream& out, const Checkpoint& checkpoint) {
  const KgCopyModel& model = checkpoint.model;
  const ModelDims& dims = model.dims();
  const Vocabulary& vocab = model.vocab();
  nlohmann::json header;
  header["dims"] = {{"vocab_size", dims.vocab_size},
                    {"hidden", dims.hidden},
                    {"embed", dims.embed},
                    {"max_triples", dims.max_triples}};
  header["vocab"] = std::vector<std::string>(vocab.content_tokens().begin(),
                                             vocab.content_tokens().end());
  header["vocab_hash"] = vocab.Hash();
  header["config"] = checkpoint.config.ToMap();
  header["config_hash"] = checkpoint.config.Hash();
  header["epoch"] = checkpoint.epoch;
  header["valid_entity_f1"] = checkpoint.valid_entity_f1;
  header["valid_bleu"] = checkpoint.valid_bleu;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : model.params().Tensors()) {
    tensors.push_back({{"name", std::string(t.name)}, {"rows", t.rows}, {"cols", t.cols}});
  }
  header["tensors"] = tensors;
  header["word_vectors"] = {{"rows", model.word_vectors().vectors().rows()},
                            {"cols", model.word_vectors().vectors().cols()},
                            {"num_pretrained", model.word_vectors().num_pretrained()}};
  const std::string text = header.dump();

  out.write(kMagic, sizeof(kMagic));
  WritePod<uint32_t>(out, kCheckpointVersion);
  WritePod<uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : model.params().Tensors()) {
    out.write(reinterpret_cast<const char*>(t.data),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  const auto& wv = model.word_vectors().vectors();
  out.write(reinterpret_cast<const char*>(wv.data()),
            static_cast<std::streamsize>(wv.size() * sizeof(double)));
}

Checkpoint ReadCheckpoint(std::istream& in, const std::string& source) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(source + ": not a kgcopy checkpoint");
  }
  const auto version = ReadPod<uint32_t>(in, source);
  if (version != kCheckpointVersion) {
    throw FormatError(source + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto length = ReadPod<uint64_t>(in, source);
  if (length > (1ull << 32)) throw FormatError(source + ": implausible header length");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw FormatError(source + ": truncated checkpoint header");
  }

  try {
    const auto header = nlohmann::json::parse(text);
    ModelDims dims;
    dims.vocab_size = header.at("dims").at("vocab_size").get<int>();
    dims.hidden = header.at("dims").at("hidden").get<int>();
    dims.embed = header.at("dims").at("embed").get<int>();
    dims.max_triples = header.at("dims").at("max_triples").get<int>();

    Vocabulary vocab(header.at("vocab").get<std::vector<std::string>>());
    if (vocab.size() != dims.vocab_size) throw FormatError(source + ": vocabulary size mismatch");
    if (vocab.Hash() != header.at("vocab_hash").get<uint64_t>()) {
      throw FormatError(source + ": vocabulary hash mismatch");
    }

    TrainConfig config;
    for (const auto& [key, value] :
         header.at("config").get<std::map<std::string, std::string>>()) {
      config.Set(key, value);
    }

    ModelParams params = ModelParams::Zeros(dims);
    auto views = params.Tensors();
    const auto& directory = header.at("tensors");
    if (directory.size() != views.size()) throw FormatError(source + ": tensor count mismatch");
    for (size_t i = 0; i < views.size(); ++i) {
      if (directory[i].at("name").get<std::string>() != views[i].name ||
          directory[i].at("rows").get<Eigen::Index>() != views[i].rows ||
          directory[i].at("cols").get<Eigen::Index>() != views[i].cols) {
        throw FormatError(source + ": unexpected tensor " + directory[i].dump());
      }
      ReadDoubles(in, views[i].data, views[i].size(), source);
    }

    const auto& wv = header.at("word_vectors");
    const auto rows = wv.at("rows").get<Eigen::Index>();
    const auto cols = wv.at("cols").get<Eigen::Index>();
    if (rows != dims.vocab_size || cols != dims.embed) {
      throw FormatError(source + ": word vector shape mismatch");
    }
    Eigen::MatrixXd vectors(rows, cols);
    ReadDoubles(in, vectors.data(), vectors.size(), source);
    EmbeddingTable table(std::move(vocab), std::move(vectors));
    table.set_num_pretrained(wv.at("num_pretrained").get<int>());

    Checkpoint out{KgCopyModel(std::move(params), std::move(table)), config};
    out.epoch = header.at("epoch").get<int>();
    out.valid_entity_f1 = header.at("valid_entity_f1").get<double>();
    out.valid_bleu = header.at("valid_bleu").get<double>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(source + ": bad checkpoint header: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(source + ": bad checkpoint header: " + e.what());
  }
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    WriteCheckpoint(out, checkpoint);
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return ReadCheckpoint(in, path);
}

}  // namespace kgcopy
