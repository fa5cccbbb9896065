#ifndef KGCOPY_VOCABULARY_H_
#define KGCOPY_VOCABULARY_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgcopy {

// Token <-> id map. Ids 0..kNumReserved-1 are fixed special symbols.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSos = 2;
  static constexpr int kEos = 3;
  // Separates utterances inside an encoded context.
  static constexpr int kSep = 4;
  static constexpr int kNumReserved = 5;

  Vocabulary();
  // `tokens` lists the non-reserved entries in id order.
  explicit Vocabulary(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int Id(std::string_view token) const;
  bool Contains(std::string_view token) const;
  const std::string& Token(int id) const { return tokens_.at(id); }
  std::vector<int> Encode(std::span<const std::string> tokens) const;

  // Non-reserved tokens in id order.
  std::span<const std::string> content_tokens() const {
    return std::span<const std::string>(tokens_).subspan(kNumReserved);
  }

  // Stable 64-bit FNV-1a hash over all tokens in id order.
  uint64_t Hash() const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

  static std::span<const std::string_view> ReservedTokens();

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace kgcopy

#endif  // KGCOPY_VOCABULARY_H_
