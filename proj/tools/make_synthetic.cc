#include <iostream>

#include "CLI11.hpp"
#include "kgcopy/synthetic.h"

int main(int argc, char** argv) {
  CLI::App app{"Write the templated toy corpus used by the tests", "kgcopy-synth"};
  std::string out = "synthetic";
  kgcopy::SyntheticOptions options;
  app.add_option("out", out, "output directory");
  app.add_option("--train", options.train_dialogues);
  app.add_option("--valid", options.valid_dialogues);
  app.add_option("--test", options.test_dialogues);
  app.add_option("--seed", options.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    kgcopy::WriteSyntheticCorpus(kgcopy::MakeSyntheticCorpus(options), out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "wrote " << out << "/kg and " << out << "/data\n";
  return 0;
}
