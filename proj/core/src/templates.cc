//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/templates.h"

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "rxnseq/parallel.h"
#include "rxnseq/smiles.h"

namespace rxnseq {
namespace {

std::string_view trim(std::string_view s) {
  const char *ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) {
    return {};
  }
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto p = s.find(sep, start);
    out.push_back(s.substr(start, p - start));
    if (p == std::string_view::npos) {
      return out;
    }
    start = p + 1;
  }
}

// Canonical SMILES of each ';'-separated molecule.
std::vector<std::string> parse_molecule_list(std::string_view field, int line,
                                             const std::string &name) {
  std::vector<std::string> out;
  if (trim(field).empty()) {
    return out;
  }
  // Salts such as "[Na+].[BH4-]" contribute one entry per ion so that
  // records stay sorted after re-normalization.
  for (std::string_view item: split(field, ';')) {
    item = trim(item);
    if (item.empty()) {
      throw TemplateError(TemplateError::Kind::kSyntax, line, name,
                          "empty molecule in list");
    }
    for (const std::string &mol: split_molecules(item)) {
      try {
        out.push_back(canonical_smiles(parse_smiles(mol)));
      } catch (const InputError &e) {
        throw TemplateError(TemplateError::Kind::kSyntax, line, name,
                            "bad molecule '" + mol + "': " + e.what());
      }
    }
  }
  return out;
}

void check_template(const ReactionTemplate &t, int line) {
  using Kind = TemplateError::Kind;
  if (!t.substrate.connected() || !t.product.connected()) {
    throw TemplateError(Kind::kSyntax, line, t.name, "patterns must be connected");
  }
  for (const PatternAtom &a: t.substrate.atoms()) {
    if (a.introduced) {
      throw TemplateError(Kind::kSyntax, line, t.name,
                          "'new' atoms belong to the product pattern");
    }
    if (a.map == 0) {
      throw TemplateError(Kind::kUnboundMapNumber, line, t.name,
                          "substrate pattern atom without a map number");
    }
  }
  for (const PatternAtom &a: t.product.atoms()) {
    if (a.introduced) {
      if (a.element == "*") {
        throw TemplateError(Kind::kSyntax, line, t.name,
                            "introduced atoms need an element");
      }
      if (a.map > 0 && t.substrate.atom_with_map(a.map)) {
        throw TemplateError(Kind::kSyntax, line, t.name,
                            "introduced atom reuses map number "
                                + std::to_string(a.map));
      }
      continue;
    }
    if (a.map == 0 || !t.substrate.atom_with_map(a.map)) {
      throw TemplateError(Kind::kUnboundMapNumber, line, t.name,
                          "product atom " + (a.map ? std::to_string(a.map) : "")
                              + " has no substrate counterpart");
    }
  }
}

struct Candidate {
  int score;
  std::vector<std::string> products;
  std::string key;
};

// One embedding's edit. Throws ValenceError on impossible chemistry.
Candidate apply_embedding(const ReactionTemplate &t, const MolGraph &substrate,
                          const Embedding &emb) {
  const Pattern &sp = t.substrate;
  const Pattern &pp = t.product;
  std::map<int, int> target_of_map = embedding_by_map_number(sp, emb);

  std::vector<Atom> atoms = substrate.atoms();
  std::vector<bool> keep(atoms.size(), true);
  std::vector<int> pattern_of_target(atoms.size(), -1);
  for (int i = 0; i < sp.num_atoms(); ++i) {
    pattern_of_target[emb[i]] = i;
  }

  // Product pattern atom -> working atom index.
  std::vector<int> out_of(pp.num_atoms(), -1);
  std::set<int> retained_maps;
  for (int pi = 0; pi < pp.num_atoms(); ++pi) {
    const PatternAtom &pa = pp.atoms()[pi];
    if (pa.introduced) {
      Atom a;
      a.element = pa.element;
      a.aromatic = pa.aromatic;
      a.charge = pa.charge.value_or(0);
      a.implicit_hydrogens = a.charge == 0 && is_organic_subset(a.element);
      a.hydrogens = a.implicit_hydrogens ? 0 : pa.min_hydrogens;
      out_of[pi] = static_cast<int>(atoms.size());
      atoms.push_back(std::move(a));
      keep.push_back(true);
      pattern_of_target.push_back(-1);
    } else {
      out_of[pi] = target_of_map.at(pa.map);
      retained_maps.insert(pa.map);
    }
  }
  for (int si = 0; si < sp.num_atoms(); ++si) {
    if (!retained_maps.count(sp.atoms()[si].map)) {
      keep[emb[si]] = false;
    }
  }

  // Working atom -> product pattern atom, for retained matched atoms.
  std::vector<int> product_of(atoms.size(), -1);
  for (int pi = 0; pi < pp.num_atoms(); ++pi) {
    product_of[out_of[pi]] = pi;
  }

  struct Edge {
    int a;
    int b;
    BondOrder order;
  };
  std::vector<Edge> edges;
  for (const Bond &b: substrate.bonds()) {
    int sa = pattern_of_target[b.a];
    int sb = pattern_of_target[b.b];
    if (sa >= 0 && sb >= 0 && product_of[b.a] >= 0 && product_of[b.b] >= 0) {
      if (auto pb = pp.find_bond(product_of[b.a], product_of[b.b])) {
        BondOrder order = pp.bonds()[*pb].order;
        // Unchanged bonds keep their stereo marks.
        if (constitutional_order(b.order) == order) {
          order = b.order;
        }
        edges.push_back({ b.a, b.b, order });
        continue;
      }
      if (sp.find_bond(sa, sb)) {
        continue;  // broken by the template
      }
    }
    edges.push_back({ b.a, b.b, b.order });
  }
  for (const PatternBond &pb: pp.bonds()) {
    int a = out_of[pb.a];
    int b = out_of[pb.b];
    bool present = std::any_of(edges.begin(), edges.end(), [&](const Edge &e) {
      return (e.a == a && e.b == b) || (e.a == b && e.b == a);
    });
    if (!present) {
      edges.push_back({ a, b, pb.order });
    }
  }

  std::vector<int> old_valence(atoms.size(), 0);
  for (int i = 0; i < substrate.num_atoms(); ++i) {
    old_valence[i] = substrate.valence_sum(i);
  }

  // Regioselectivity score: busiest matched carbon gaining an introduced
  // neighbor.
  int score = 0;
  for (const PatternBond &pb: pp.bonds()) {
    bool a_new = pp.atoms()[pb.a].introduced;
    bool b_new = pp.atoms()[pb.b].introduced;
    if (a_new != b_new) {
      int matched = out_of[a_new ? pb.b : pb.a];
      score = std::max(score, substrate.heavy_degree(matched));
    }
  }

  std::vector<int> index(atoms.size(), -1);
  MolGraph g;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (keep[i]) {
      index[i] = g.add_atom(atoms[i]);
    }
  }
  for (const Edge &e: edges) {
    if (keep[e.a] && keep[e.b]) {
      g.add_bond(index[e.a], index[e.b], e.order);
    }
  }
  // Bracket atoms have fixed hydrogens; valence gained by an edit comes out
  // of them.
  for (std::size_t i = 0; i < static_cast<std::size_t>(substrate.num_atoms());
       ++i) {
    if (keep[i] && !atoms[i].implicit_hydrogens && product_of[i] >= 0) {
      Atom &a = g.atom(index[i]);
      int delta = g.valence_sum(index[i]) - old_valence[i];
      if (delta > a.hydrogens) {
        throw ValenceError("template '" + t.name + "' overfills a bracket atom");
      }
      a.hydrogens -= delta;
    }
  }
  g.assign_implicit_hydrogens();

  std::set<int> product_atoms;
  for (int pi = 0; pi < pp.num_atoms(); ++pi) {
    product_atoms.insert(index[out_of[pi]]);
  }
  Candidate c;
  c.score = score;
  for (const auto &comp: g.components()) {
    bool touched = std::any_of(comp.begin(), comp.end(), [&](int a) {
      return product_atoms.count(a) > 0;
    });
    if (touched) {
      c.products.push_back(canonical_smiles(g.induced(comp)));
    }
  }
  std::sort(c.products.begin(), c.products.end());
  c.key = join_molecules(c.products);
  return c;
}

struct FunctionalGroupDef {
  std::string_view name;
  std::string_view pattern;
  std::vector<int> consumed;  // pattern atoms that belong to the group
};

const std::vector<FunctionalGroupDef> &functional_group_defs() {
  // Priority order: an atom counted by an earlier group is not reused.
  static const std::vector<FunctionalGroupDef> defs = {
    { "acid_derivative", "C(=O)O", { 0, 1, 2 } },
    { "acid_derivative", "C(=O)N", { 0, 1, 2 } },
    { "acid_derivative", "C(=O)S", { 0, 1, 2 } },
    { "acid_derivative", "C(=O)F", { 0, 1, 2 } },
    { "acid_derivative", "C(=O)Cl", { 0, 1, 2 } },
    { "acid_derivative", "C(=O)Br", { 0, 1, 2 } },
    { "acid_derivative", "C(=O)I", { 0, 1, 2 } },
    { "nitrile", "C#N", { 0, 1 } },
    { "carbonyl", "C=O", { 0, 1 } },
    { "alkyne", "C#C", { 0, 1 } },
    { "alkene", "C=C", { 0, 1 } },
    { "imine", "C=N", { 0, 1 } },
    { "hydroxyl", "[O;H1;D1]", { 0 } },
    { "ether", "[O;H0;D2]", { 0 } },
    { "amine", "N", { 0 } },
    { "sulfur", "S", { 0 } },
    { "halide", "F", { 0 } },
    { "halide", "Cl", { 0 } },
    { "halide", "Br", { 0 } },
    { "halide", "I", { 0 } },
  };
  return defs;
}

const std::vector<Pattern> &functional_group_patterns() {
  static const std::vector<Pattern> patterns = [] {
    std::vector<Pattern> out;
    for (const auto &d: functional_group_defs()) {
      out.push_back(Pattern::parse(d.pattern));
    }
    return out;
  }();
  return patterns;
}

bool has_motif(const MolGraph &g, const std::vector<Pattern> &motifs) {
  return std::any_of(motifs.begin(), motifs.end(), [&](const Pattern &p) {
    return !match_pattern(p, g).empty();
  });
}

}  // namespace

TemplateError::TemplateError(Kind kind, int line, std::string template_name,
                             const std::string &what)
    : InputError("template line " + std::to_string(line)
                 + (template_name.empty() ? "" : " (" + template_name + ")")
                 + ": " + what),
      kind_(kind), line_(line), template_name_(std::move(template_name)) {}

std::vector<ReactionTemplate> parse_templates(std::istream &in) {
  std::vector<ReactionTemplate> out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = trim(raw);
    if (text.empty() || text.front() == '#') {
      continue;
    }
    auto fields = split(text, '|');
    for (auto &f: fields) {
      f = trim(f);
    }
    if (fields.size() != 5 && fields.size() != 6) {
      throw TemplateError(TemplateError::Kind::kSyntax, line, "",
                          "expected 5 or 6 '|'-separated fields");
    }
    ReactionTemplate t;
    t.name = std::string(fields[0]);
    if (t.name.empty()) {
      throw TemplateError(TemplateError::Kind::kSyntax, line, "",
                          "template name is empty");
    }
    try {
      t.substrate = Pattern::parse(fields[1]);
      t.product = Pattern::parse(fields[4]);
    } catch (const PatternError &e) {
      throw TemplateError(TemplateError::Kind::kSyntax, line, t.name, e.what());
    }
    t.coreactants = parse_molecule_list(fields[2], line, t.name);
    t.reagents = parse_molecule_list(fields[3], line, t.name);
    if (fields.size() == 6 && !fields[5].empty()) {
      if (fields[5] == "anti") {
        t.selectivity = Selectivity::kAntiMarkovnikov;
      } else if (fields[5] != "markovnikov") {
        throw TemplateError(TemplateError::Kind::kSyntax, line, t.name,
                            "unknown selectivity '" + std::string(fields[5]) + "'");
      }
    }
    check_template(t, line);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<ReactionTemplate> load_templates(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open template file " + path.string());
  }
  return parse_templates(in);
}

std::vector<ReactionRecord> apply_template(const ReactionTemplate &t,
                                           const MolGraph &substrate) {
  std::vector<Candidate> candidates;
  std::optional<ValenceError> first_error;
  for (const Embedding &emb: match_pattern(t.substrate, substrate)) {
    try {
      candidates.push_back(apply_embedding(t, substrate, emb));
    } catch (const ValenceError &e) {
      if (!first_error) {
        first_error = e;
      }
    }
  }
  if (candidates.empty()) {
    if (first_error) {
      throw *first_error;
    }
    return {};
  }

  bool prefer_high = t.selectivity == Selectivity::kMarkovnikov;
  const Candidate *best = &candidates.front();
  for (const Candidate &c: candidates) {
    bool better_score = prefer_high ? c.score > best->score : c.score < best->score;
    if (better_score || (c.score == best->score && c.key < best->key)) {
      best = &c;
    }
  }

  ReactionRecord r;
  r.source = ReactionSource::kGenerated;
  r.reactants.push_back(canonical_smiles(substrate));
  r.reactants.insert(r.reactants.end(), t.coreactants.begin(), t.coreactants.end());
  std::sort(r.reactants.begin(), r.reactants.end());
  r.reagents = t.reagents;
  std::sort(r.reagents.begin(), r.reagents.end());
  r.products = best->products;
  return { std::move(r) };
}

std::vector<FunctionalGroupMatch> find_functional_groups(const MolGraph &g) {
  std::vector<FunctionalGroupMatch> out;
  std::vector<bool> consumed(g.num_atoms(), false);
  const auto &defs = functional_group_defs();
  const auto &patterns = functional_group_patterns();
  for (std::size_t d = 0; d < defs.size(); ++d) {
    for (const Embedding &emb: match_pattern(patterns[d], g)) {
      bool free = std::none_of(defs[d].consumed.begin(), defs[d].consumed.end(),
                               [&](int pi) { return consumed[emb[pi]]; });
      if (!free) {
        continue;
      }
      FunctionalGroupMatch m;
      m.name = std::string(defs[d].name);
      for (int pi: defs[d].consumed) {
        consumed[emb[pi]] = true;
        m.atoms.push_back(emb[pi]);
      }
      out.push_back(std::move(m));
    }
  }
  return out;
}

std::vector<Pattern> default_forbidden_motifs() {
  return { Pattern::parse("CC(C)(C)[C;H2]") };
}

SubstrateSet enumerate_substrates(const std::vector<std::string> &raw,
                                  const SubstrateFilter &filter) {
  SubstrateSet out;
  std::unordered_set<std::string> seen;

  auto consider = [&](MolGraph g) {
    int n = g.num_heavy_atoms();
    if (n < filter.min_atoms || n > filter.max_atoms) {
      return;
    }
    if (static_cast<int>(find_functional_groups(g).size())
        > filter.max_functional_groups) {
      return;
    }
    if (has_motif(g, filter.forbidden_motifs)) {
      return;
    }
    std::string smiles = canonical_smiles(g);
    if (seen.insert(smiles).second) {
      out.smiles.push_back(std::move(smiles));
      out.molecules.push_back(std::move(g));
    }
  };

  for (const std::string &line: raw) {
    std::string_view text = trim(line);
    text = text.substr(0, text.find_first_of(" \t"));
    if (text.empty() || text.front() == '#') {
      continue;
    }
    MolGraph g;
    try {
      g = parse_smiles(text);
    } catch (const InputError &) {
      out.invalid_lines.emplace_back(text);
      continue;
    }
    bool has_fluorine = std::any_of(g.atoms().begin(), g.atoms().end(),
                                    [](const Atom &a) { return a.element == "F"; });
    consider(g);
    if (filter.substitute_halides && has_fluorine) {
      for (const char *halogen: { "Cl", "Br", "I" }) {
        MolGraph v = g;
        for (Atom &a: v.atoms()) {
          if (a.element == "F") {
            a.element = halogen;
          }
        }
        v.assign_implicit_hydrogens();
        consider(std::move(v));
      }
    }
  }
  return out;
}

GenerationResult generate_dataset(const std::vector<ReactionTemplate> &templates,
                                  const std::vector<MolGraph> &substrates) {
  struct Cell {
    std::vector<ReactionRecord> records;
    std::optional<GenerationFailure> failure;
  };
  const std::size_t ns = substrates.size();
  std::vector<Cell> cells(templates.size() * ns);
  parallel_for(cells.size(), [&](std::size_t i) {
    const ReactionTemplate &t = templates[i / ns];
    const MolGraph &s = substrates[i % ns];
    try {
      cells[i].records = apply_template(t, s);
    } catch (const InputError &e) {
      cells[i].failure = GenerationFailure { t.name, canonical_smiles(s), e.what() };
    }
  });

  GenerationResult out;
  std::unordered_set<std::string> seen;
  for (Cell &c: cells) {
    if (c.failure) {
      out.failures.push_back(std::move(*c.failure));
    }
    for (ReactionRecord &r: c.records) {
      if (seen.insert(r.to_string()).second) {
        out.records.push_back(std::move(r));
      }
    }
  }
  return out;
}

GenerationResult generate_dataset(const std::vector<ReactionTemplate> &templates,
                                  const std::vector<std::string> &raw_substrates,
                                  const SubstrateFilter &filter) {
  return generate_dataset(templates,
                          enumerate_substrates(raw_substrates, filter).molecules);
}

}  // namespace rxnseq
