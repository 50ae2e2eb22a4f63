//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_TOOLS_CLI_H_
#define RXNSEQ_TOOLS_CLI_H_

#include <iosfwd>

namespace rxnseq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInternal = 2;

// Entry point of the rxnseq executable. Data goes to out, diagnostics to err.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace rxnseq::cli

#endif  // RXNSEQ_TOOLS_CLI_H_
