//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_SMILES_H_
#define RXNSEQ_SMILES_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rxnseq/error.h"

namespace rxnseq {

enum class TokenKind {
  kOrganicAtom,
  kAromaticAtom,
  kBracketAtom,
  kBond,
  kBranchOpen,
  kBranchClose,
  kRingClosure,
  kDot,
  // '>' between the parts of a reaction SMILES.
  kSeparator,
};

std::string_view token_kind_name(TokenKind kind);

// Parsed contents of a bracket atom such as [13CH3+:7].
struct BracketAtom {
  std::string element;  // as written, e.g. "C", "c", "Se", "*"
  bool aromatic = false;
  std::optional<int> isotope;
  std::string chirality;  // "", "@", "@@", "@TH1", ...
  int hydrogens = 0;
  int charge = 0;
  std::optional<int> atom_map;

  // Renders the payload back to bracket text.
  std::string to_string() const;
};

struct Token {
  TokenKind kind;
  std::string text;
  std::optional<BracketAtom> bracket;

  bool is_atom() const {
    return kind == TokenKind::kOrganicAtom || kind == TokenKind::kAromaticAtom
           || kind == TokenKind::kBracketAtom;
  }

  bool operator==(const Token &other) const {
    return kind == other.kind && text == other.text;
  }
};

using TokenSequence = std::vector<Token>;

class SmilesError: public InputError {
public:
  enum class Kind {
    kUnrecognizedCharacter,
    kUnterminatedBracket,
    kMalformedReaction,
    kInvalidStructure,
  };

  SmilesError(Kind kind, std::size_t position, const std::string &what);

  Kind kind() const { return kind_; }
  std::size_t position() const { return position_; }

private:
  Kind kind_;
  std::size_t position_;
};

// Splits SMILES (or reaction SMILES) text into lexical tokens. The tokens
// partition the input exactly: detokenize(tokenize(s)) == s.
TokenSequence tokenize(std::string_view text);

// Ring-closure number of a kRingClosure token ("7" -> 7, "%12" -> 12).
int ring_closure_number(const Token &token);

std::string detokenize(std::span<const Token> tokens);

// Token texts only, in order.
std::vector<std::string> token_texts(std::span<const Token> tokens);

struct ReactionParts {
  std::string reactants;
  std::string reagents;
  std::string products;

  std::string to_string() const {
    return reactants + '>' + reagents + '>' + products;
  }
};

ReactionParts split_reaction(std::string_view text);

// Splits a dot-separated molecule list; empty input gives an empty list.
std::vector<std::string> split_molecules(std::string_view part);

// Removes atom-map numbers. Bracket atoms that no longer carry information
// beyond what a bare organic-subset atom implies are rewritten as bare atoms.
TokenSequence strip_atom_maps(std::span<const Token> tokens);

std::string strip_atom_maps(std::string_view text);

struct ValidationIssue {
  enum class Kind {
    kUnclosedBranch,
    kUnmatchedBranchClose,
    kEmptyBranch,
    kMisplacedBranch,
    kUnpairedRingClosure,
    kMisplacedRingClosure,
    kDanglingBond,
    kMisplacedDot,
    kTooManySeparators,
  };

  Kind kind;
  std::size_t token_index;
};

std::string_view validation_issue_name(ValidationIssue::Kind kind);

struct ValidationResult {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  bool has(ValidationIssue::Kind kind) const;
};

// Checks token-level structure. Never throws.
ValidationResult validate(std::span<const Token> tokens);

}  // namespace rxnseq

#endif  // RXNSEQ_SMILES_H_
