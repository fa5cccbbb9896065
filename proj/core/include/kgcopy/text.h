#ifndef KGCOPY_TEXT_H_
#define KGCOPY_TEXT_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgcopy {

// Canonical matching form of a label or utterance: Unicode NFC, case folded,
// runs of whitespace collapsed to a single space, ends trimmed.
std::string NormalizeText(std::string_view text);

// Lowercases and splits on whitespace and punctuation. Every punctuation
// code point becomes its own token.
std::vector<std::string> Tokenize(std::string_view text);

std::string JoinTokens(std::span<const std::string> tokens,
                       std::string_view separator = " ");

// True when `needle` occurs as a contiguous run inside `haystack`.
bool ContainsSequence(std::span<const std::string> haystack,
                      std::span<const std::string> needle);

}  // namespace kgcopy

#endif  // KGCOPY_TEXT_H_
