//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include <iostream>

#include "cli.h"

int main(int argc, char **argv) {
  return rxnseq::cli::run(argc, argv, std::cout, std::cerr);
}
