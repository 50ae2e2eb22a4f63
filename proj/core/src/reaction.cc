//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/reaction.h"

#include "rxnseq/smiles.h"

namespace rxnseq {

std::string join_molecules(const std::vector<std::string> &molecules) {
  std::string out;
  for (std::size_t i = 0; i < molecules.size(); ++i) {
    if (i > 0) {
      out += '.';
    }
    out += molecules[i];
  }
  return out;
}

std::string ReactionRecord::to_string() const {
  return source_text() + product_text();
}

std::string ReactionRecord::source_text() const {
  return join_molecules(reactants) + '>' + join_molecules(reagents) + '>';
}

std::string ReactionRecord::product_text() const {
  return join_molecules(products);
}

ReactionRecord ReactionRecord::from_string(std::string_view reaction,
                                           ReactionSource source) {
  ReactionParts parts = split_reaction(reaction);
  ReactionRecord r;
  r.reactants = split_molecules(parts.reactants);
  r.reagents = split_molecules(parts.reagents);
  r.products = split_molecules(parts.products);
  r.source = source;
  return r;
}

}  // namespace rxnseq
