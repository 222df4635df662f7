// Writes the synthetic separable corpus (MSDialog layout) to stdout or a file.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "intentpipe/io.h"
#include "intentpipe/synthetic.h"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic intent corpus"};
  intentpipe::SyntheticSpec spec;
  std::string out;
  app.add_option("--conversations", spec.conversations, "Number of conversations");
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--keywords-min", spec.keywords_min, "Fewest keywords per utterance");
  app.add_option("--keywords-max", spec.keywords_max, "Most keywords per utterance");
  app.add_option("--out", out, "Output file (stdout when omitted)");
  CLI11_PARSE(app, argc, argv);

  const std::string text = intentpipe::dump_json(intentpipe::synthetic_corpus(spec));
  if (out.empty()) {
    std::cout << text;
  } else {
    intentpipe::write_file_atomic(out, text);
  }
  return 0;
}
