//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/pattern.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>
#include <string>
#include <vector>

#include "rxnseq/smiles.h"

namespace rxnseq {
namespace {

[[noreturn]] void pattern_error(std::string_view text, const std::string &what) {
  throw PatternError("pattern '" + std::string(text) + "': " + what);
}

int parse_int(std::string_view s, std::string_view text) {
  int value = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size()) {
    pattern_error(text, "bad number '" + std::string(s) + "'");
  }
  return value;
}

// "n" or "n-m".
std::pair<int, int> parse_range(std::string_view s, std::string_view text) {
  auto dash = s.find('-');
  if (dash == std::string_view::npos) {
    int v = parse_int(s, text);
    return { v, v };
  }
  int lo = parse_int(s.substr(0, dash), text);
  int hi = parse_int(s.substr(dash + 1), text);
  if (lo > hi) {
    pattern_error(text, "empty range '" + std::string(s) + "'");
  }
  return { lo, hi };
}

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

bool is_aromatic_symbol(std::string_view s) {
  return s == "c" || s == "n" || s == "o" || s == "s" || s == "p" || s == "b";
}

// Contents between '[' and ']'.
PatternAtom parse_bracket(std::string_view body, std::string_view text) {
  PatternAtom atom;
  auto colon = body.rfind(':');
  if (colon != std::string_view::npos) {
    atom.map = parse_int(body.substr(colon + 1), text);
    if (atom.map <= 0) {
      pattern_error(text, "map numbers must be positive");
    }
    body = body.substr(0, colon);
  }

  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto semi = body.find(';', start);
    fields.push_back(body.substr(start, semi - start));
    if (semi == std::string_view::npos) {
      break;
    }
    start = semi + 1;
  }

  std::string_view symbol = fields.front();
  if (symbol == "*") {
    atom.element = "*";
  } else if (is_aromatic_symbol(symbol)) {
    atom.element = capitalize(symbol);
    atom.aromatic = true;
  } else if (symbol.size() >= 1 && symbol.size() <= 2
             && std::isupper(static_cast<unsigned char>(symbol[0]))
             && (symbol.size() == 1
                 || std::islower(static_cast<unsigned char>(symbol[1])))) {
    atom.element = std::string(symbol);
  } else {
    pattern_error(text, "bad element '" + std::string(symbol) + "'");
  }

  for (std::size_t i = 1; i < fields.size(); ++i) {
    std::string_view f = fields[i];
    if (f.empty()) {
      pattern_error(text, "empty constraint");
    } else if (f == "new") {
      atom.introduced = true;
    } else if (f[0] == 'D') {
      std::tie(atom.min_degree, atom.max_degree) = parse_range(f.substr(1), text);
    } else if (f[0] == 'H') {
      std::tie(atom.min_hydrogens, atom.max_hydrogens) =
          parse_range(f.substr(1), text);
    } else if (f[0] == '+' || f[0] == '-') {
      int sign = f[0] == '+' ? 1 : -1;
      atom.charge = f.size() == 1 ? sign : sign * parse_int(f.substr(1), text);
    } else {
      pattern_error(text, "unknown constraint '" + std::string(f) + "'");
    }
  }
  return atom;
}

}  // namespace

Pattern Pattern::parse(std::string_view text) {
  Pattern p;
  p.text_ = std::string(text);
  if (text.empty()) {
    pattern_error(text, "empty pattern");
  }

  // Bracket atoms are replaced by placeholder tokens; everything else is
  // ordinary SMILES and goes through the regular lexer.
  TokenSequence tokens;
  std::vector<PatternAtom> bracket_atoms;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] == '[') {
      auto close = text.find(']', pos);
      if (close == std::string_view::npos) {
        pattern_error(text, "unterminated bracket");
      }
      PatternAtom atom = parse_bracket(text.substr(pos + 1, close - pos - 1), text);
      BracketAtom payload;
      payload.element = atom.aromatic ? std::string(1, static_cast<char>(
                                            std::tolower(atom.element[0])))
                                      : atom.element;
      payload.aromatic = atom.aromatic;
      tokens.push_back({ TokenKind::kBracketAtom,
                         std::string(text.substr(pos, close - pos + 1)),
                         payload });
      bracket_atoms.push_back(std::move(atom));
      pos = close + 1;
      continue;
    }
    auto next = text.find('[', pos);
    std::string_view segment = text.substr(pos, next - pos);
    try {
      for (Token &t: tokenize(segment)) {
        if (t.kind == TokenKind::kSeparator || t.kind == TokenKind::kDot) {
          pattern_error(text, "patterns are single molecules");
        }
        tokens.push_back(std::move(t));
      }
    } catch (const SmilesError &e) {
      pattern_error(text, e.what());
    }
    pos = next == std::string_view::npos ? text.size() : next;
  }

  ValidationResult v = validate(tokens);
  if (!v.ok()) {
    pattern_error(text,
                  std::string(validation_issue_name(v.issues.front().kind)));
  }
  Topology topo;
  try {
    topo = build_topology(tokens);
  } catch (const InputError &e) {
    pattern_error(text, e.what());
  }

  std::size_t next_bracket = 0;
  for (std::size_t ti: topo.atom_tokens) {
    const Token &tok = tokens[ti];
    if (tok.kind == TokenKind::kBracketAtom) {
      p.atoms_.push_back(bracket_atoms[next_bracket++]);
    } else {
      PatternAtom atom;
      atom.element = capitalize(tok.text);
      atom.aromatic = tok.kind == TokenKind::kAromaticAtom;
      p.atoms_.push_back(std::move(atom));
    }
  }
  p.neighbors_.resize(p.atoms_.size());
  for (const auto &e: topo.edges) {
    p.bonds_.push_back({ e.a, e.b, constitutional_order(e.order) });
    p.neighbors_[e.a].push_back(e.b);
    p.neighbors_[e.b].push_back(e.a);
  }

  std::vector<int> maps;
  for (const auto &a: p.atoms_) {
    if (a.map > 0) {
      maps.push_back(a.map);
    }
  }
  std::sort(maps.begin(), maps.end());
  if (std::adjacent_find(maps.begin(), maps.end()) != maps.end()) {
    pattern_error(text, "duplicate map number");
  }
  return p;
}

std::optional<int> Pattern::find_bond(int a, int b) const {
  for (std::size_t i = 0; i < bonds_.size(); ++i) {
    if ((bonds_[i].a == a && bonds_[i].b == b)
        || (bonds_[i].a == b && bonds_[i].b == a)) {
      return static_cast<int>(i);
    }
  }
  return std::nullopt;
}

std::optional<int> Pattern::atom_with_map(int map) const {
  for (int i = 0; i < num_atoms(); ++i) {
    if (atoms_[i].map == map) {
      return i;
    }
  }
  return std::nullopt;
}

bool Pattern::connected() const {
  if (atoms_.empty()) {
    return true;
  }
  std::vector<bool> seen(atoms_.size(), false);
  std::vector<int> stack = { 0 };
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    int a = stack.back();
    stack.pop_back();
    for (int n: neighbors_[a]) {
      if (!seen[n]) {
        seen[n] = true;
        ++count;
        stack.push_back(n);
      }
    }
  }
  return count == atoms_.size();
}

bool atom_matches(const PatternAtom &p, const MolGraph &g, int atom) {
  const Atom &a = g.atom(atom);
  if (p.element != "*" && (p.element != a.element || p.aromatic != a.aromatic)) {
    return false;
  }
  if (p.charge && *p.charge != a.charge) {
    return false;
  }
  int d = g.heavy_degree(atom);
  if (d < p.min_degree || d > p.max_degree) {
    return false;
  }
  int h = g.total_hydrogens(atom);
  return h >= p.min_hydrogens && h <= p.max_hydrogens;
}

bool bond_matches(BondOrder pattern, BondOrder target) {
  return constitutional_order(pattern) == constitutional_order(target);
}

std::vector<Embedding> match_pattern(const Pattern &p, const MolGraph &g) {
  const int n = p.num_atoms();
  std::vector<Embedding> out;
  if (n == 0 || n > g.num_atoms()) {
    return out;
  }

  // Search order: BFS per pattern component; each non-root atom is extended
  // from its BFS parent.
  std::vector<int> order;
  std::vector<int> parent(n, -1);
  std::vector<bool> seen(n, false);
  for (int root = 0; root < n; ++root) {
    if (seen[root]) {
      continue;
    }
    std::deque<int> queue = { root };
    seen[root] = true;
    while (!queue.empty()) {
      int a = queue.front();
      queue.pop_front();
      order.push_back(a);
      for (int nb: p.neighbors(a)) {
        if (!seen[nb]) {
          seen[nb] = true;
          parent[nb] = a;
          queue.push_back(nb);
        }
      }
    }
  }

  Embedding assign(n, -1);
  std::vector<bool> used(g.num_atoms(), false);

  auto consistent = [&](int pa, int ta) {
    if (used[ta] || !atom_matches(p.atoms()[pa], g, ta)) {
      return false;
    }
    for (const PatternBond &b: p.bonds()) {
      int other = b.a == pa ? b.b : (b.b == pa ? b.a : -1);
      if (other < 0 || assign[other] < 0) {
        continue;
      }
      auto tb = g.find_bond(ta, assign[other]);
      if (!tb || !bond_matches(b.order, g.bond(*tb).order)) {
        return false;
      }
    }
    return true;
  };

  auto extend = [&](auto &self, std::size_t depth) -> void {
    if (depth == order.size()) {
      out.push_back(assign);
      return;
    }
    int pa = order[depth];
    auto attempt = [&](int ta) {
      if (consistent(pa, ta)) {
        assign[pa] = ta;
        used[ta] = true;
        self(self, depth + 1);
        used[ta] = false;
        assign[pa] = -1;
      }
    };
    if (parent[pa] < 0) {
      for (int ta = 0; ta < g.num_atoms(); ++ta) {
        attempt(ta);
      }
    } else {
      int anchor = assign[parent[pa]];
      for (int bi: g.incident(anchor)) {
        attempt(g.bond(bi).other(anchor));
      }
    }
  };
  extend(extend, 0);

  std::sort(out.begin(), out.end());
  return out;
}

std::map<int, int> embedding_by_map_number(const Pattern &p,
                                           const Embedding &embedding) {
  std::map<int, int> out;
  for (int i = 0; i < p.num_atoms(); ++i) {
    if (p.atoms()[i].map > 0) {
      out[p.atoms()[i].map] = embedding[i];
    }
  }
  return out;
}

}  // namespace rxnseq
