//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_REACTION_H_
#define RXNSEQ_REACTION_H_

#include <string>
#include <string_view>
#include <vector>

namespace rxnseq {

enum class ReactionSource {
  kGenerated,
  kIngested,
};

struct ReactionRecord {
  std::vector<std::string> reactants;
  std::vector<std::string> reagents;
  std::vector<std::string> products;
  ReactionSource source = ReactionSource::kIngested;

  // "reactants>reagents>products" with dot-joined parts.
  std::string to_string() const;

  // "reactants>reagents>", the encoder side of a reaction.
  std::string source_text() const;

  std::string product_text() const;

  // Splits a reaction SMILES into molecule lists without canonicalizing.
  static ReactionRecord from_string(std::string_view reaction,
                                    ReactionSource source);

  bool operator==(const ReactionRecord &other) const = default;
};

std::string join_molecules(const std::vector<std::string> &molecules);

}  // namespace rxnseq

#endif  // RXNSEQ_REACTION_H_
