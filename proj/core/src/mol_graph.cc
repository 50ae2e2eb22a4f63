//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/mol_graph.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace rxnseq {
namespace {

struct ValenceEntry {
  std::string_view element;
  std::array<int, 3> valences;  // ascending, 0 = unused
};

constexpr std::array kOrganicValences = {
  ValenceEntry { "B", { 3, 0, 0 } },  ValenceEntry { "C", { 4, 0, 0 } },
  ValenceEntry { "N", { 3, 5, 0 } },  ValenceEntry { "O", { 2, 0, 0 } },
  ValenceEntry { "P", { 3, 5, 0 } },  ValenceEntry { "S", { 2, 4, 6 } },
  ValenceEntry { "F", { 1, 0, 0 } },  ValenceEntry { "Cl", { 1, 0, 0 } },
  ValenceEntry { "Br", { 1, 0, 0 } }, ValenceEntry { "I", { 1, 0, 0 } },
};

const ValenceEntry *find_valences(std::string_view element) {
  for (const ValenceEntry &e: kOrganicValences) {
    if (e.element == element) {
      return &e;
    }
  }
  return nullptr;
}

std::optional<BondOrder> bond_from_text(std::string_view text) {
  if (text == "-") {
    return BondOrder::kSingle;
  }
  if (text == "=") {
    return BondOrder::kDouble;
  }
  if (text == "#") {
    return BondOrder::kTriple;
  }
  if (text == ":") {
    return BondOrder::kAromatic;
  }
  if (text == "/") {
    return BondOrder::kUp;
  }
  if (text == "\\") {
    return BondOrder::kDown;
  }
  return std::nullopt;
}

bool token_is_aromatic(const Token &t) {
  return t.kind == TokenKind::kAromaticAtom
         || (t.kind == TokenKind::kBracketAtom && t.bracket
             && t.bracket->aromatic);
}

[[noreturn]] void structure_error(std::size_t index, const std::string &what) {
  throw SmilesError(SmilesError::Kind::kInvalidStructure, index, what);
}

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

}  // namespace

int bond_valence(BondOrder order) {
  switch (order) {
  case BondOrder::kDouble:
    return 2;
  case BondOrder::kTriple:
    return 3;
  default:
    return 1;
  }
}

BondOrder constitutional_order(BondOrder order) {
  return order == BondOrder::kUp || order == BondOrder::kDown
             ? BondOrder::kSingle
             : order;
}

bool is_organic_subset(std::string_view element) {
  return find_valences(element) != nullptr;
}

std::optional<int> implicit_hydrogen_count(std::string_view element,
                                           bool aromatic, int valence_sum) {
  const ValenceEntry *entry = find_valences(element);
  if (entry == nullptr) {
    return std::nullopt;
  }
  if (aromatic) {
    return std::max(0, entry->valences[0] - valence_sum - 1);
  }
  for (int v: entry->valences) {
    if (v != 0 && v >= valence_sum) {
      return v - valence_sum;
    }
  }
  return std::nullopt;
}

int MolGraph::add_atom(Atom atom) {
  atoms_.push_back(std::move(atom));
  adjacency_.emplace_back();
  return num_atoms() - 1;
}

int MolGraph::add_bond(int a, int b, BondOrder order) {
  if (a < 0 || b < 0 || a >= num_atoms() || b >= num_atoms()) {
    throw GraphError("bond atom index out of range");
  }
  if (a == b) {
    throw GraphError("bond from an atom to itself");
  }
  if (find_bond(a, b)) {
    throw GraphError("duplicate bond between atoms " + std::to_string(a)
                     + " and " + std::to_string(b));
  }
  bonds_.push_back({ a, b, order });
  int idx = num_bonds() - 1;
  adjacency_[a].push_back(idx);
  adjacency_[b].push_back(idx);
  return idx;
}

std::optional<int> MolGraph::find_bond(int a, int b) const {
  for (int bi: adjacency_[a]) {
    if (bonds_[bi].other(a) == b) {
      return bi;
    }
  }
  return std::nullopt;
}

int MolGraph::num_heavy_atoms() const {
  return static_cast<int>(std::count_if(
      atoms_.begin(), atoms_.end(),
      [](const Atom &a) { return a.element != "H"; }));
}

int MolGraph::heavy_degree(int atom) const {
  int d = 0;
  for (int bi: adjacency_[atom]) {
    if (atoms_[bonds_[bi].other(atom)].element != "H") {
      ++d;
    }
  }
  return d;
}

int MolGraph::valence_sum(int atom) const {
  int sum = 0;
  for (int bi: adjacency_[atom]) {
    sum += bond_valence(bonds_[bi].order);
  }
  return sum;
}

int MolGraph::total_hydrogens(int atom) const {
  return atoms_[atom].hydrogens + degree(atom) - heavy_degree(atom);
}

void MolGraph::assign_implicit_hydrogens() {
  for (int i = 0; i < num_atoms(); ++i) {
    Atom &atom = atoms_[i];
    if (!atom.implicit_hydrogens) {
      continue;
    }
    int sum = valence_sum(i);
    auto h = implicit_hydrogen_count(atom.element, atom.aromatic, sum);
    if (!h) {
      throw ValenceError("atom " + std::to_string(i) + " (" + atom.element
                         + ") has bond valence " + std::to_string(sum)
                         + " beyond its allowed valence");
    }
    atom.hydrogens = *h;
  }
}

std::vector<std::vector<int>> MolGraph::components() const {
  std::vector<int> comp(num_atoms(), -1);
  std::vector<std::vector<int>> out;
  for (int start = 0; start < num_atoms(); ++start) {
    if (comp[start] >= 0) {
      continue;
    }
    int id = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<int> stack { start };
    comp[start] = id;
    while (!stack.empty()) {
      int a = stack.back();
      stack.pop_back();
      out[id].push_back(a);
      for (int bi: adjacency_[a]) {
        int o = bonds_[bi].other(a);
        if (comp[o] < 0) {
          comp[o] = id;
          stack.push_back(o);
        }
      }
    }
    std::sort(out[id].begin(), out[id].end());
  }
  return out;
}

MolGraph MolGraph::induced(std::span<const int> atoms) const {
  std::vector<int> remap(num_atoms(), -1);
  MolGraph g;
  for (int a: atoms) {
    remap[a] = g.add_atom(atoms_[a]);
  }
  for (const Bond &b: bonds_) {
    if (remap[b.a] >= 0 && remap[b.b] >= 0) {
      g.add_bond(remap[b.a], remap[b.b], b.order);
    }
  }
  return g;
}

MolGraph MolGraph::without(std::span<const int> atoms) const {
  std::vector<bool> drop(num_atoms(), false);
  for (int a: atoms) {
    drop[a] = true;
  }
  std::vector<int> keep;
  for (int i = 0; i < num_atoms(); ++i) {
    if (!drop[i]) {
      keep.push_back(i);
    }
  }
  return induced(keep);
}

Topology build_topology(std::span<const Token> tokens) {
  Topology topo;
  std::vector<bool> aromatic;

  struct PendingBond {
    BondOrder order;
    std::size_t index;
  };
  struct OpenRing {
    int atom;
    std::optional<BondOrder> order;
    std::size_t index;
  };

  int prev = -1;
  std::optional<PendingBond> pending;
  std::vector<int> branches;
  std::map<int, OpenRing> rings;

  auto default_order = [&](int a, int b) {
    return aromatic[a] && aromatic[b] ? BondOrder::kAromatic
                                      : BondOrder::kSingle;
  };
  auto add_edge = [&](int a, int b, std::optional<BondOrder> order,
                      std::size_t index) {
    if (a == b) {
      throw GraphError("ring closure at token " + std::to_string(index)
                       + " bonds an atom to itself");
    }
    for (const auto &e: topo.edges) {
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) {
        throw GraphError("duplicate bond at token " + std::to_string(index));
      }
    }
    topo.edges.push_back({ a, b, order.value_or(default_order(a, b)),
                           order.has_value() });
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token &tok = tokens[i];
    switch (tok.kind) {
    case TokenKind::kOrganicAtom:
    case TokenKind::kAromaticAtom:
    case TokenKind::kBracketAtom: {
      int idx = static_cast<int>(topo.atom_tokens.size());
      topo.atom_tokens.push_back(i);
      aromatic.push_back(token_is_aromatic(tok));
      if (prev >= 0) {
        add_edge(prev, idx,
                 pending ? std::optional(pending->order) : std::nullopt, i);
      } else if (pending) {
        structure_error(pending->index, "bond without a preceding atom");
      }
      pending.reset();
      prev = idx;
      break;
    }
    case TokenKind::kBond:
      if (pending || prev < 0) {
        structure_error(i, "misplaced bond");
      }
      pending = PendingBond { *bond_from_text(tok.text), i };
      break;
    case TokenKind::kBranchOpen:
      if (prev < 0 || pending) {
        structure_error(i, "misplaced branch");
      }
      branches.push_back(prev);
      break;
    case TokenKind::kBranchClose:
      if (branches.empty() || pending) {
        structure_error(i, "unmatched branch close");
      }
      prev = branches.back();
      branches.pop_back();
      break;
    case TokenKind::kRingClosure: {
      if (prev < 0) {
        structure_error(i, "ring closure without an atom");
      }
      int number = ring_closure_number(tok);
      std::optional<BondOrder> here =
          pending ? std::optional(pending->order) : std::nullopt;
      pending.reset();
      auto it = rings.find(number);
      if (it == rings.end()) {
        rings.emplace(number, OpenRing { prev, here, i });
        break;
      }
      OpenRing open = it->second;
      rings.erase(it);
      if (open.order && here && *open.order != *here) {
        structure_error(i, "conflicting ring closure bond orders");
      }
      add_edge(open.atom, prev, open.order ? open.order : here, i);
      break;
    }
    case TokenKind::kDot:
      if (pending || !branches.empty() || prev < 0) {
        structure_error(i, "misplaced dot");
      }
      prev = -1;
      break;
    case TokenKind::kSeparator:
      structure_error(i, "reaction separator inside a molecule");
    }
  }

  if (pending) {
    structure_error(pending->index, "dangling bond");
  }
  if (!branches.empty()) {
    structure_error(tokens.size(), "unclosed branch");
  }
  if (!rings.empty()) {
    structure_error(rings.begin()->second.index, "unpaired ring closure");
  }
  return topo;
}

MolGraph parse_graph(std::span<const Token> tokens) {
  Topology topo = build_topology(tokens);
  MolGraph g;
  for (std::size_t ti: topo.atom_tokens) {
    const Token &tok = tokens[ti];
    Atom atom;
    if (tok.kind == TokenKind::kBracketAtom) {
      const BracketAtom &b = *tok.bracket;
      atom.element = capitalize(b.element);
      atom.aromatic = b.aromatic;
      atom.charge = b.charge;
      atom.hydrogens = b.hydrogens;
      atom.isotope = b.isotope;
      atom.chirality = b.chirality;
    } else {
      atom.element = capitalize(tok.text);
      atom.aromatic = tok.kind == TokenKind::kAromaticAtom;
      atom.implicit_hydrogens = true;
    }
    g.add_atom(std::move(atom));
  }
  for (const auto &e: topo.edges) {
    g.add_bond(e.a, e.b, e.order);
  }
  g.assign_implicit_hydrogens();
  return g;
}

MolGraph parse_smiles(std::string_view smiles) {
  TokenSequence tokens = tokenize(smiles);
  ValidationResult v = validate(tokens);
  if (!v.ok()) {
    const ValidationIssue &first = v.issues.front();
    throw SmilesError(SmilesError::Kind::kInvalidStructure, first.token_index,
                      "invalid SMILES '" + std::string(smiles) + "': "
                          + std::string(validation_issue_name(first.kind)));
  }
  return parse_graph(tokens);
}

std::vector<bool> ring_bonds(const MolGraph &g) {
  // Bridges are exactly the bonds on no cycle (Tarjan low-link).
  const int n = g.num_atoms();
  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<bool> in_ring(g.num_bonds(), true);
  int timer = 0;

  std::function<void(int, int)> dfs = [&](int a, int parent_bond) {
    disc[a] = low[a] = timer++;
    for (int bi: g.incident(a)) {
      if (bi == parent_bond) {
        continue;
      }
      int o = g.bond(bi).other(a);
      if (disc[o] < 0) {
        dfs(o, bi);
        low[a] = std::min(low[a], low[o]);
        if (low[o] > disc[a]) {
          in_ring[bi] = false;
        }
      } else {
        low[a] = std::min(low[a], disc[o]);
      }
    }
  };
  for (int a = 0; a < n; ++a) {
    if (disc[a] < 0) {
      dfs(a, -1);
    }
  }
  return in_ring;
}

std::vector<bool> ring_atoms(const MolGraph &g) {
  std::vector<bool> rb = ring_bonds(g);
  std::vector<bool> out(g.num_atoms(), false);
  for (int bi = 0; bi < g.num_bonds(); ++bi) {
    if (rb[bi]) {
      out[g.bond(bi).a] = out[g.bond(bi).b] = true;
    }
  }
  return out;
}

}  // namespace rxnseq
