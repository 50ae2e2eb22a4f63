//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "rxnseq/mol_graph.h"

namespace rxnseq {
namespace {

// Dense ranks of keys: equal keys share a rank, ranks ordered by key.
template <class Key>
std::vector<int> dense_ranks(const std::vector<Key> &keys, int &num_classes) {
  std::vector<int> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return keys[a] < keys[b]; });
  std::vector<int> ranks(keys.size(), 0);
  int rank = -1;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || keys[order[i - 1]] < keys[order[i]]) {
      ++rank;
    }
    ranks[order[i]] = rank;
  }
  num_classes = rank + 1;
  return ranks;
}

int bond_code(BondOrder order) {
  return static_cast<int>(constitutional_order(order));
}

// Iterates neighborhood refinement until the partition is stable.
std::vector<int> refine(const MolGraph &g, std::vector<int> ranks,
                        int &num_classes) {
  const int n = g.num_atoms();
  while (true) {
    using Key = std::pair<int, std::vector<std::pair<int, int>>>;
    std::vector<Key> keys(n);
    for (int a = 0; a < n; ++a) {
      keys[a].first = ranks[a];
      for (int bi: g.incident(a)) {
        const Bond &b = g.bond(bi);
        keys[a].second.emplace_back(ranks[b.other(a)], bond_code(b.order));
      }
      std::sort(keys[a].second.begin(), keys[a].second.end());
    }
    int refined_classes = 0;
    std::vector<int> refined = dense_ranks(keys, refined_classes);
    if (refined_classes == num_classes) {
      return ranks;
    }
    ranks = std::move(refined);
    num_classes = refined_classes;
  }
}

std::string ring_digit(int d) {
  if (d < 10) {
    return std::to_string(d);
  }
  return "%" + std::to_string(d);
}

bool is_directional(BondOrder order) {
  return order == BondOrder::kUp || order == BondOrder::kDown;
}

std::string bond_symbol(const MolGraph &g, int bond_index, int from) {
  const Bond &b = g.bond(bond_index);
  bool both_aromatic = g.atom(b.a).aromatic && g.atom(b.b).aromatic;
  switch (b.order) {
  case BondOrder::kSingle:
    return both_aromatic ? "-" : "";
  case BondOrder::kDouble:
    return "=";
  case BondOrder::kTriple:
    return "#";
  case BondOrder::kAromatic:
    return both_aromatic ? "" : ":";
  case BondOrder::kUp:
    return from == b.a ? "/" : "\\";
  case BondOrder::kDown:
    return from == b.a ? "\\" : "/";
  }
  return "";
}

std::string atom_text(const MolGraph &g, int index) {
  const Atom &atom = g.atom(index);
  std::string symbol = atom.element;
  if (atom.aromatic && !symbol.empty()) {
    symbol[0] =
        static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[0])));
  }

  bool bare_allowed = is_organic_subset(atom.element) && atom.charge == 0
                      && !atom.isotope && atom.chirality.empty();
  if (atom.aromatic) {
    static constexpr std::string_view kBareAromatic[] = { "B", "C", "N",
                                                          "O", "P", "S" };
    bare_allowed = bare_allowed
                   && std::find(std::begin(kBareAromatic),
                                std::end(kBareAromatic), atom.element)
                          != std::end(kBareAromatic);
  }
  if (bare_allowed) {
    auto h = implicit_hydrogen_count(atom.element, atom.aromatic,
                                     g.valence_sum(index));
    if (h && *h == atom.hydrogens) {
      return symbol;
    }
  }

  BracketAtom bracket;
  bracket.element = symbol;
  bracket.isotope = atom.isotope;
  bracket.chirality = atom.chirality;
  bracket.hydrogens = atom.hydrogens;
  bracket.charge = atom.charge;
  return bracket.to_string();
}

class SmilesWriter {
public:
  SmilesWriter(const MolGraph &g, std::span<const int> priority)
      : g_(g), priority_(priority), visited_(g.num_atoms(), false),
        preorder_(g.num_atoms(), -1), parent_bond_(g.num_atoms(), -1),
        children_(g.num_atoms()), ring_bonds_(g.num_atoms()),
        classified_(g.num_bonds(), false), digit_of_(g.num_bonds(), 0),
        stereo_group_(g.num_bonds(), -1) {
    group_directional_bonds();
  }

  std::string write() {
    std::vector<std::vector<int>> comps = g_.components();
    std::vector<int> roots;
    for (const auto &comp: comps) {
      roots.push_back(*std::min_element(
          comp.begin(), comp.end(),
          [&](int a, int b) { return priority_[a] < priority_[b]; }));
    }
    std::sort(roots.begin(), roots.end(),
              [&](int a, int b) { return priority_[a] < priority_[b]; });

    std::string out;
    for (std::size_t i = 0; i < roots.size(); ++i) {
      if (i > 0) {
        out += '.';
      }
      explore(roots[i]);
      emit(roots[i], out);
    }
    return out;
  }

private:
  std::vector<int> sorted_incident(int a) const {
    std::vector<int> bonds = g_.incident(a);
    std::sort(bonds.begin(), bonds.end(), [&](int x, int y) {
      return priority_[g_.bond(x).other(a)] < priority_[g_.bond(y).other(a)];
    });
    return bonds;
  }

  void explore(int a) {
    visited_[a] = true;
    preorder_[a] = counter_++;
    for (int bi: sorted_incident(a)) {
      if (bi == parent_bond_[a] || classified_[bi]) {
        continue;
      }
      int o = g_.bond(bi).other(a);
      classified_[bi] = true;
      if (!visited_[o]) {
        parent_bond_[o] = bi;
        children_[a].push_back(o);
        explore(o);
      } else {
        ring_bonds_[a].push_back(bi);
        ring_bonds_[o].push_back(bi);
      }
    }
  }

  // Directional bonds around the same double bond(s) form one group. A group
  // may be flipped as a whole without changing its meaning, so the first
  // symbol written for each group is normalized to '/'.
  void group_directional_bonds() {
    std::vector<int> parent(g_.num_bonds());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (const Bond &db: g_.bonds()) {
      if (db.order != BondOrder::kDouble) {
        continue;
      }
      int first = -1;
      for (int end: { db.a, db.b }) {
        for (int bi: g_.incident(end)) {
          if (!is_directional(g_.bond(bi).order)) {
            continue;
          }
          if (first < 0) {
            first = bi;
          } else {
            parent[find(bi)] = find(first);
          }
        }
      }
    }
    for (int bi = 0; bi < g_.num_bonds(); ++bi) {
      if (is_directional(g_.bond(bi).order)) {
        stereo_group_[bi] = find(bi);
      }
    }
  }

  std::string symbol(int bond_index, int from) {
    std::string sym = bond_symbol(g_, bond_index, from);
    int group = stereo_group_[bond_index];
    if (group < 0) {
      return sym;
    }
    auto [it, inserted] = flip_group_.try_emplace(group, sym == "\\");
    if (it->second) {
      sym = sym == "/" ? "\\" : "/";
    }
    return sym;
  }

  int take_digit() {
    for (int d = 1;; ++d) {
      if (std::find(used_digits_.begin(), used_digits_.end(), d)
          == used_digits_.end()) {
        used_digits_.push_back(d);
        return d;
      }
    }
  }

  void emit(int a, std::string &out) {
    out += atom_text(g_, a);

    std::vector<int> rings = ring_bonds_[a];
    std::sort(rings.begin(), rings.end(), [&](int x, int y) {
      return preorder_[g_.bond(x).other(a)] < preorder_[g_.bond(y).other(a)];
    });
    std::vector<int> released;
    for (int bi: rings) {
      int o = g_.bond(bi).other(a);
      if (preorder_[o] < preorder_[a]) {
        out += ring_digit(digit_of_[bi]);
        released.push_back(digit_of_[bi]);
      } else {
        digit_of_[bi] = take_digit();
        out += symbol(bi, a);
        out += ring_digit(digit_of_[bi]);
      }
    }
    for (int d: released) {
      used_digits_.erase(
          std::find(used_digits_.begin(), used_digits_.end(), d));
    }

    const auto &kids = children_[a];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      int c = kids[i];
      bool branch = i + 1 < kids.size();
      if (branch) {
        out += '(';
      }
      out += symbol(parent_bond_[c], a);
      emit(c, out);
      if (branch) {
        out += ')';
      }
    }
  }

  const MolGraph &g_;
  std::span<const int> priority_;
  std::vector<bool> visited_;
  std::vector<int> preorder_;
  std::vector<int> parent_bond_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> ring_bonds_;
  std::vector<bool> classified_;
  std::vector<int> digit_of_;
  std::vector<int> used_digits_;
  std::vector<int> stereo_group_;
  std::map<int, bool> flip_group_;
  int counter_ = 0;
};

}  // namespace

std::vector<int> canonical_ranks(const MolGraph &g) {
  const int n = g.num_atoms();
  std::vector<bool> in_ring = ring_atoms(g);

  using Invariant = std::tuple<std::string, bool, int, int, int, bool, int>;
  std::vector<Invariant> invariants(n);
  for (int a = 0; a < n; ++a) {
    const Atom &atom = g.atom(a);
    invariants[a] = { atom.element,     atom.aromatic,
                      g.degree(a),      atom.charge,
                      atom.hydrogens,   in_ring[a],
                      atom.isotope.value_or(-1) };
  }
  int classes = 0;
  std::vector<int> ranks = dense_ranks(invariants, classes);
  ranks = refine(g, std::move(ranks), classes);

  // Break remaining ties: the lowest tied class gives up one member, which
  // moves ahead of its former class mates, then refine again.
  while (classes < n) {
    std::vector<int> count(n, 0);
    for (int r: ranks) {
      ++count[r];
    }
    int tied = 0;
    while (count[tied] < 2) {
      ++tied;
    }
    int chosen = static_cast<int>(
        std::find(ranks.begin(), ranks.end(), tied) - ranks.begin());
    for (int &r: ranks) {
      r *= 2;
    }
    ranks[chosen] -= 1;
    int c = 0;
    ranks = dense_ranks(ranks, c);
    classes = c;
    ranks = refine(g, std::move(ranks), classes);
  }
  return ranks;
}

std::string write_smiles(const MolGraph &g, std::span<const int> priority) {
  return SmilesWriter(g, priority).write();
}

std::string canonical_smiles(const MolGraph &g) {
  std::vector<int> ranks = canonical_ranks(g);
  return write_smiles(g, ranks);
}

std::string canonical_smiles(std::string_view smiles) {
  return canonical_smiles(parse_smiles(smiles));
}

std::string random_smiles(const MolGraph &g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> priority(g.num_atoms());
  std::iota(priority.begin(), priority.end(), 0);
  for (int i = g.num_atoms() - 1; i > 0; --i) {
    int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(priority[i], priority[j]);
  }
  return write_smiles(g, priority);
}

}  // namespace rxnseq
