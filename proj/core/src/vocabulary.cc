#include "kgcopy/vocabulary.h"

#include <array>
#include <stdexcept>

namespace kgcopy {
namespace {

constexpr std::array<std::string_view, Vocabulary::kNumReserved> kReserved = {
    "<pad>", "<unk>", "<sos>", "<eos>", "<sep>"};

}  // namespace

std::span<const std::string_view> Vocabulary::ReservedTokens() {
  return kReserved;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_.reserve(kReserved.size() + tokens.size());
  for (auto r : kReserved) tokens_.emplace_back(r);
  for (auto& t : tokens) tokens_.push_back(std::move(t));
  for (int i = 0; i < size(); ++i) {
    if (!ids_.emplace(tokens_[i], i).second) {
      throw std::invalid_argument("duplicate vocabulary token: " + tokens_[i]);
    }
  }
}

int Vocabulary::Id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::Contains(std::string_view token) const {
  return ids_.count(std::string(token)) > 0;
}

std::vector<int> Vocabulary::Encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(Id(t));
  return ids;
}

uint64_t Vocabulary::Hash() const {
  uint64_t h = 14695981039346656037ull;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;  // token boundary
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace kgcopy
