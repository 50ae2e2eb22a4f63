//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_MOL_GRAPH_H_
#define RXNSEQ_MOL_GRAPH_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rxnseq/smiles.h"

namespace rxnseq {

enum class BondOrder : std::uint8_t {
  kSingle,
  kDouble,
  kTriple,
  kAromatic,
  kUp,    // '/' written from atom a towards atom b
  kDown,  // '\' written from atom a towards atom b
};

// Valence contribution of a bond; directional bonds count as single.
int bond_valence(BondOrder order);

// Directional bonds collapse to single; used wherever stereo is ignored.
BondOrder constitutional_order(BondOrder order);

struct Atom {
  std::string element;  // capitalized symbol, "*" for a wildcard
  bool aromatic = false;
  int charge = 0;
  int hydrogens = 0;  // total attached implicit + bracket hydrogens
  std::optional<int> isotope;
  std::string chirality;
  // Hydrogen count follows from valence (bare organic-subset atom).
  bool implicit_hydrogens = false;
};

struct Bond {
  int a;
  int b;
  BondOrder order;

  int other(int atom) const { return atom == a ? b : a; }
};

class MolGraph {
public:
  int add_atom(Atom atom);
  // Throws GraphError on self loops, duplicate bonds or bad indices.
  int add_bond(int a, int b, BondOrder order);
  void set_bond_order(int bond, BondOrder order) { bonds_[bond].order = order; }

  const std::vector<Atom> &atoms() const { return atoms_; }
  std::vector<Atom> &atoms() { return atoms_; }
  const std::vector<Bond> &bonds() const { return bonds_; }
  const Atom &atom(int i) const { return atoms_[i]; }
  Atom &atom(int i) { return atoms_[i]; }
  const Bond &bond(int i) const { return bonds_[i]; }

  int num_atoms() const { return static_cast<int>(atoms_.size()); }
  int num_bonds() const { return static_cast<int>(bonds_.size()); }
  int num_heavy_atoms() const;
  bool empty() const { return atoms_.empty(); }

  // Bond indices incident to an atom, in insertion order.
  const std::vector<int> &incident(int atom) const { return adjacency_[atom]; }
  std::optional<int> find_bond(int a, int b) const;

  int degree(int atom) const {
    return static_cast<int>(adjacency_[atom].size());
  }
  int heavy_degree(int atom) const;
  int valence_sum(int atom) const;
  // Implicit/bracket hydrogens plus explicit [H] neighbors.
  int total_hydrogens(int atom) const;

  // Recomputes hydrogens of implicit-hydrogen atoms from their bonds.
  // Throws ValenceError when a bond sum exceeds the allowed valence.
  void assign_implicit_hydrogens();

  // Connected components as sorted atom lists, ordered by smallest atom.
  std::vector<std::vector<int>> components() const;

  // Subgraph induced by the given atoms, renumbered in the given order.
  MolGraph induced(std::span<const int> atoms) const;

  // Graph with the given atoms removed.
  MolGraph without(std::span<const int> atoms) const;

private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<int>> adjacency_;
};

// Elements written without brackets in SMILES.
bool is_organic_subset(std::string_view element);

// Implicit hydrogen count for a bare organic-subset atom with the given bond
// valence sum, or nullopt if the sum exceeds every allowed valence. Aromatic
// atoms use their default valence minus one for the delocalized bond.
std::optional<int> implicit_hydrogen_count(std::string_view element,
                                           bool aromatic, int valence_sum);

// Connectivity recovered from a token stream before atom properties are
// interpreted. Shared by molecule parsing, pattern parsing and map stripping.
struct Topology {
  struct Edge {
    int a;
    int b;
    BondOrder order;
    bool explicit_order;
  };

  std::vector<std::size_t> atom_tokens;  // token index of each atom
  std::vector<Edge> edges;
};

// Throws SmilesError(kInvalidStructure) on structural errors and GraphError on
// self loops or duplicate bonds. Separator tokens are rejected.
Topology build_topology(std::span<const Token> tokens);

// Builds a molecular graph; dots separate components.
MolGraph parse_graph(std::span<const Token> tokens);

// tokenize + validate + parse_graph.
MolGraph parse_smiles(std::string_view smiles);

// Canonical atom ranks (0 = first), all distinct.
std::vector<int> canonical_ranks(const MolGraph &g);

// Deterministic SMILES shared by every rendering of isomorphic graphs.
std::string canonical_smiles(const MolGraph &g);

std::string canonical_smiles(std::string_view smiles);

// SMILES of g with a randomized root and neighbor order, fixed per seed.
std::string random_smiles(const MolGraph &g, std::uint64_t seed);

// Writes SMILES visiting atoms by ascending priority (a permutation).
std::string write_smiles(const MolGraph &g, std::span<const int> priority);

// Ring membership per bond (bond lies on a cycle).
std::vector<bool> ring_bonds(const MolGraph &g);
std::vector<bool> ring_atoms(const MolGraph &g);

class Fingerprint {
public:
  Fingerprint(int nbits, int radius);

  int nbits() const { return nbits_; }
  int radius() const { return radius_; }

  void set(int bit);
  bool test(int bit) const;
  int count() const;
  std::vector<int> on_bits() const;

  const std::vector<std::uint64_t> &words() const { return words_; }

  bool operator==(const Fingerprint &other) const = default;

private:
  int nbits_;
  int radius_;
  std::vector<std::uint64_t> words_;
};

class FingerprintError: public InputError {
public:
  using InputError::InputError;
};

inline constexpr int kDefaultFingerprintBits = 2048;
inline constexpr int kDefaultFingerprintRadius = 2;

// Environment identifiers per radius (outer) per atom (inner), before folding
// into bits. Exposed for tests and diagnostics.
std::vector<std::vector<std::uint64_t>> morgan_environments(const MolGraph &g,
                                                            int radius);

Fingerprint morgan_fingerprint(const MolGraph &g,
                               int radius = kDefaultFingerprintRadius,
                               int nbits = kDefaultFingerprintBits);

// |a & b| / |a | b|; two empty fingerprints have similarity 1.
double tanimoto(const Fingerprint &a, const Fingerprint &b);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace rxnseq

#endif  // RXNSEQ_MOL_GRAPH_H_
