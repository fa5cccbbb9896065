#ifndef KGCOPY_ERRORS_H_
#define KGCOPY_ERRORS_H_

#include <stdexcept>
#include <string>

namespace kgcopy {

// Malformed input record. `location` is a line number or record id.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, const std::string& location,
             const std::string& what)
      : std::runtime_error(source + ":" + location + ": " + what),
        location_(location) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

// Structurally valid file whose contents violate a shape contract.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyKgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(int epoch, int batch, const std::string& what)
      : std::runtime_error("epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

}  // namespace kgcopy

#endif  // KGCOPY_ERRORS_H_
