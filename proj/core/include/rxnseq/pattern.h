//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_PATTERN_H_
#define RXNSEQ_PATTERN_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rxnseq/mol_graph.h"

namespace rxnseq {

// One atom of a mapped pattern. Bracket syntax:
//   [C;D1-3;H1;+0:4]   element C, 1..3 heavy neighbors, one hydrogen,
//                      neutral, map number 4
//   [O;new]            template-introduced atom (product side only)
// Bare organic symbols outside brackets match any atom of that element.
struct PatternAtom {
  std::string element;  // capitalized; "*" matches any element
  bool aromatic = false;
  std::optional<int> charge;
  int min_degree = 0;
  int max_degree = 99;
  int min_hydrogens = 0;
  int max_hydrogens = 99;
  int map = 0;  // 0 = unmapped
  bool introduced = false;
};

struct PatternBond {
  int a;
  int b;
  BondOrder order;
};

class PatternError: public InputError {
public:
  using InputError::InputError;
};

class Pattern {
public:
  // Throws PatternError on malformed text.
  static Pattern parse(std::string_view text);

  const std::string &text() const { return text_; }
  const std::vector<PatternAtom> &atoms() const { return atoms_; }
  const std::vector<PatternBond> &bonds() const { return bonds_; }
  int num_atoms() const { return static_cast<int>(atoms_.size()); }

  std::optional<int> find_bond(int a, int b) const;
  std::optional<int> atom_with_map(int map) const;
  const std::vector<int> &neighbors(int atom) const { return neighbors_[atom]; }
  bool connected() const;

private:
  std::string text_;
  std::vector<PatternAtom> atoms_;
  std::vector<PatternBond> bonds_;
  std::vector<std::vector<int>> neighbors_;
};

bool atom_matches(const PatternAtom &p, const MolGraph &g, int atom);
bool bond_matches(BondOrder pattern, BondOrder target);

// Target atom index for each pattern atom.
using Embedding = std::vector<int>;

// All injective embeddings of p into g that satisfy every atom constraint and
// have a matching target bond for every pattern bond. Sorted
// lexicographically.
std::vector<Embedding> match_pattern(const Pattern &p, const MolGraph &g);

// Map number -> target atom for the mapped atoms of an embedding.
std::map<int, int> embedding_by_map_number(const Pattern &p,
                                           const Embedding &embedding);

}  // namespace rxnseq

#endif  // RXNSEQ_PATTERN_H_
