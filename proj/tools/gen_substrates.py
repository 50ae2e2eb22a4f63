#!/usr/bin/env python3
#
# rxnseq - reaction product prediction toolkit
# SPDX-License-Identifier: Apache-2.0
#
"""Enumerate small substrates carrying one functional group.

Each seed is a functional-group core or a small carbocyclic alkene; carbon
atoms are grown onto it one at a time until the heavy-atom limit. Isomorphic
graphs are removed, so every output line is a distinct molecule. Fluorides stand in for all halides:
the generator's halide substitution produces the Cl, Br and I variants.

Output is deterministic: sorted by heavy-atom count, then SMILES text.
"""

import argparse
import sys

import networkx as nx

# (SMILES-like description as atoms and bonds, indices of atoms that may
# receive new carbons). Atom 0 is always a carbon attachment point.
SEEDS = {
    "alkene": (["C", "C"], [(0, 1, 2)], {0, 1}),
    "alkyne": (["C", "C"], [(0, 1, 3)], {0, 1}),
    "alcohol": (["C", "O"], [(0, 1, 1)], {0}),
    "carbonyl": (["C", "O"], [(0, 1, 2)], {0}),
    "acid": (["C", "O", "O"], [(0, 1, 2), (0, 2, 1)], {0}),
    "methyl_ester": (["C", "O", "O", "C"], [(0, 1, 2), (0, 2, 1), (2, 3, 1)], {0}),
    "acyl_chloride": (["C", "O", "Cl"], [(0, 1, 2), (0, 2, 1)], {0}),
    "fluoride": (["C", "F"], [(0, 1, 1)], {0}),
}


def ring(size, double_at=None, exo=False):
    """Carbocycle; an endocyclic double bond or an exocyclic =CH2."""
    atoms = ["C"] * size
    bonds = [(i, (i + 1) % size, 2 if i == double_at else 1) for i in range(size)]
    if exo:
        atoms.append("C")
        bonds.append((0, size, 2))
    return atoms, bonds, set(range(len(atoms)))


for n in (4, 5, 6):
    SEEDS["cycloalkene%d" % n] = ring(n, double_at=0)
for n in (3, 4, 5, 6):
    SEEDS["methylenecycloalkane%d" % n] = ring(n, exo=True)

# Ring and aromatic substrates, written by hand.
EXTRA = [
    "OC1CCCCC1",
    "O=C1CCCCC1",
    "O=C1CCCC1",
    "FC1CCCCC1",
    "C=Cc1ccccc1",
    "O=Cc1ccccc1",
    "CC(=O)c1ccccc1",
    "OC(=O)c1ccccc1",
    "OCc1ccccc1",
    "C#Cc1ccccc1",
]

BOND_SYMBOL = {1: "", 2: "=", 3: "#"}
VALENCE = {"C": 4}


class Mol:
    def __init__(self, atoms, bonds, growable):
        self.atoms = list(atoms)
        self.bonds = list(bonds)
        self.growable = set(growable)

    def valence_used(self, i):
        return sum(o for a, b, o in self.bonds if i in (a, b))

    def grown(self, at):
        n = len(self.atoms)
        return Mol(self.atoms + ["C"], self.bonds + [(at, n, 1)],
                   self.growable | {n})

    def graph(self):
        g = nx.Graph()
        for i, e in enumerate(self.atoms):
            g.add_node(i, element=e)
        for a, b, o in self.bonds:
            g.add_edge(a, b, order=str(o))
        return g

    def smiles(self):
        adj = {i: [] for i in range(len(self.atoms))}
        for a, b, o in self.bonds:
            adj[a].append((b, o))
            adj[b].append((a, o))
        # Start from a terminal atom for short strings.
        start = min(range(len(self.atoms)), key=lambda i: (len(adj[i]), i))

        # Spanning tree by DFS; every other edge becomes a ring closure.
        parent = {start: None}
        order = []
        stack = [start]
        while stack:
            i = stack.pop()
            if i in order:
                continue
            order.append(i)
            for j, _ in sorted(adj[i], reverse=True):
                if j not in order:
                    parent[j] = i
                    stack.append(j)
        tree = {frozenset((j, p)) for j, p in parent.items() if p is not None}
        closures = {i: [] for i in adj}
        digit = 0
        for a, b, o in self.bonds:
            if frozenset((a, b)) not in tree:
                digit += 1
                first, second = sorted((a, b), key=order.index)
                closures[first].append(BOND_SYMBOL[o] + str(digit))
                closures[second].append(str(digit))

        def visit(i):
            text = self.atoms[i] + "".join(closures[i])
            children = [(j, o) for j, o in adj[i]
                        if parent.get(j) == i and frozenset((i, j)) in tree]
            for k, (j, o) in enumerate(children):
                branch = BOND_SYMBOL[o] + visit(j)
                text += branch if k == len(children) - 1 else "(" + branch + ")"
            return text

        return visit(start)


def enumerate_seed(atoms, bonds, growable, max_atoms):
    frontier = [Mol(atoms, bonds, growable)]
    found = list(frontier)
    while frontier:
        nxt = []
        for mol in frontier:
            if len(mol.atoms) >= max_atoms:
                continue
            for i in sorted(mol.growable):
                if mol.valence_used(i) < VALENCE["C"]:
                    nxt.append(mol.grown(i))
        nxt = unique(nxt)
        found.extend(nxt)
        frontier = nxt
    return unique(found)


def unique(mols):
    buckets = {}
    out = []
    for mol in mols:
        g = mol.graph()
        key = nx.weisfeiler_lehman_graph_hash(g, node_attr="element",
                                              edge_attr="order")
        same = buckets.setdefault(key, [])
        if any(nx.is_isomorphic(g, h,
                                node_match=lambda x, y: x["element"] == y["element"],
                                edge_match=lambda x, y: x["order"] == y["order"])
               for h in same):
            continue
        same.append(g)
        out.append(mol)
    return out


def heavy_atoms(smiles):
    count = 0
    i = 0
    while i < len(smiles):
        c = smiles[i]
        if smiles.startswith(("Cl", "Br"), i):
            count += 1
            i += 2
            continue
        if c.isalpha():
            count += 1
        i += 1
    return count


def main(argv):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-atoms", type=int, default=8)
    parser.add_argument("--out", default="-")
    args = parser.parse_args(argv)

    lines = set()
    for name, (atoms, bonds, growable) in SEEDS.items():
        for mol in enumerate_seed(atoms, bonds, growable, args.max_atoms):
            lines.add(mol.smiles())
    lines.update(s for s in EXTRA if heavy_atoms(s) <= args.max_atoms)
    ordered = sorted(lines, key=lambda s: (heavy_atoms(s), s))

    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    out.write("# substrates: one functional group, at most %d heavy atoms\n"
              % args.max_atoms)
    for s in ordered:
        out.write(s + "\n")
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main(sys.argv[1:])
