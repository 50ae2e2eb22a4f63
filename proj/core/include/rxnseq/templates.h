//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_TEMPLATES_H_
#define RXNSEQ_TEMPLATES_H_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "rxnseq/mol_graph.h"
#include "rxnseq/pattern.h"
#include "rxnseq/reaction.h"

namespace rxnseq {

// Which of several distinct products of one template is kept.
enum class Selectivity {
  // Introduced atom on the most substituted carbon.
  kMarkovnikov,
  // Introduced atom on the least substituted carbon (e.g. hydroboration).
  kAntiMarkovnikov,
};

struct ReactionTemplate {
  std::string name;
  Pattern substrate;
  std::vector<std::string> coreactants;
  std::vector<std::string> reagents;
  Pattern product;
  Selectivity selectivity = Selectivity::kMarkovnikov;
};

class TemplateError: public InputError {
public:
  enum class Kind {
    kSyntax,
    kUnboundMapNumber,
  };

  TemplateError(Kind kind, int line, std::string template_name,
                const std::string &what);

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  const std::string &template_name() const { return template_name_; }

private:
  Kind kind_;
  int line_;
  std::string template_name_;
};

// Template file: one record per line,
//   name | substrate | coreactants | reagents | product [| selectivity]
// coreactants and reagents are ';'-separated SMILES lists (may be empty);
// selectivity is "markovnikov" (default) or "anti". Lines whose first
// non-blank character is '#' are comments.
std::vector<ReactionTemplate> parse_templates(std::istream &in);
std::vector<ReactionTemplate> load_templates(const std::filesystem::path &path);

// Applies a template to every embedding in the substrate and keeps a single
// regioselected product set. Empty when the template does not match.
// Throws ValenceError when an edit produces impossible chemistry.
std::vector<ReactionRecord> apply_template(const ReactionTemplate &t,
                                           const MolGraph &substrate);

struct FunctionalGroupMatch {
  std::string name;
  std::vector<int> atoms;
};

// Non-overlapping functional groups from the built-in motif list.
std::vector<FunctionalGroupMatch> find_functional_groups(const MolGraph &g);

// Neopentyl.
std::vector<Pattern> default_forbidden_motifs();

struct SubstrateFilter {
  int min_atoms = 1;
  int max_atoms = 10;
  int max_functional_groups = 1;
  std::vector<Pattern> forbidden_motifs = default_forbidden_motifs();
  bool substitute_halides = true;
};

struct SubstrateSet {
  std::vector<MolGraph> molecules;
  std::vector<std::string> smiles;  // canonical, parallel to molecules
  std::vector<std::string> invalid_lines;
};

// Keeps molecules inside the heavy-atom bounds with at most the allowed
// number of functional groups and no forbidden motif. Each fluoride also
// yields its chloride, bromide and iodide analogues. Canonical duplicates are
// dropped, first occurrence wins.
SubstrateSet enumerate_substrates(const std::vector<std::string> &raw,
                                  const SubstrateFilter &filter);

struct GenerationFailure {
  std::string template_name;
  std::string substrate;
  std::string message;
};

struct GenerationResult {
  std::vector<ReactionRecord> records;
  std::vector<GenerationFailure> failures;
};

// Template-major grid of apply_template; duplicate reaction strings removed.
GenerationResult generate_dataset(const std::vector<ReactionTemplate> &templates,
                                  const std::vector<MolGraph> &substrates);

GenerationResult generate_dataset(const std::vector<ReactionTemplate> &templates,
                                  const std::vector<std::string> &raw_substrates,
                                  const SubstrateFilter &filter);

}  // namespace rxnseq

#endif  // RXNSEQ_TEMPLATES_H_
