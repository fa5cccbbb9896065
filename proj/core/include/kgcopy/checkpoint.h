#ifndef KGCOPY_CHECKPOINT_H_
#define KGCOPY_CHECKPOINT_H_

#include <istream>
#include <ostream>
#include <string>

#include "kgcopy/training.h"

namespace kgcopy {

// Binary layout: the 8-byte magic "KGCOPYCK", a uint32 version, a uint64
// header length, a JSON header, then every parameter tensor followed by the
// frozen word-vector table as little-endian doubles in column-major order.
inline constexpr uint32_t kCheckpointVersion = 1;

void WriteCheckpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint ReadCheckpoint(std::istream& in, const std::string& source = "<stream>");

void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path);
// Throws FormatError on a bad magic, version, header or a truncated body.
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace kgcopy

#endif  // KGCOPY_CHECKPOINT_H_
