//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/smiles.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rxnseq/mol_graph.h"

namespace rxnseq {
namespace {

constexpr std::array kElementSymbols = {
  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al",
  "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe",
  "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te",
  "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
  "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt",
  "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa",
  "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf",
  "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts",
  "Og",
};

constexpr std::array kAromaticBracketSymbols = {
  "se", "as", "te", "b", "c", "n", "o", "p", "s",
};

bool is_element_symbol(std::string_view s) {
  return std::find(kElementSymbols.begin(), kElementSymbols.end(), s)
         != kElementSymbols.end();
}

bool is_digit(char c) {
  return c >= '0' && c <= '9';
}

class BracketParser {
public:
  BracketParser(std::string_view text, std::size_t offset)
      : text_(text), offset_(offset) { }

  BracketAtom parse() {
    BracketAtom atom;
    if (is_digit(peek())) {
      atom.isotope = read_number();
    }
    parse_symbol(atom);
    parse_chirality(atom);
    if (peek() == 'H') {
      ++pos_;
      atom.hydrogens = is_digit(peek()) ? read_number() : 1;
    }
    parse_charge(atom);
    if (peek() == ':') {
      ++pos_;
      if (!is_digit(peek())) {
        fail();
      }
      atom.atom_map = read_number();
    }
    if (pos_ != text_.size()) {
      fail();
    }
    return atom;
  }

private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  [[noreturn]] void fail() const {
    throw SmilesError(SmilesError::Kind::kUnrecognizedCharacter,
                      offset_ + pos_,
                      "unexpected character in bracket atom");
  }

  int read_number() {
    int value = 0;
    while (is_digit(peek())) {
      value = value * 10 + (peek() - '0');
      ++pos_;
    }
    return value;
  }

  void parse_symbol(BracketAtom &atom) {
    if (peek() == '*') {
      atom.element = "*";
      ++pos_;
      return;
    }
    for (std::string_view sym: kAromaticBracketSymbols) {
      if (text_.substr(pos_, sym.size()) == sym) {
        atom.element = std::string(sym);
        atom.aromatic = true;
        pos_ += sym.size();
        return;
      }
    }
    if (std::isupper(static_cast<unsigned char>(peek())) != 0) {
      if (std::islower(static_cast<unsigned char>(peek(1))) != 0
          && is_element_symbol(text_.substr(pos_, 2))) {
        atom.element = std::string(text_.substr(pos_, 2));
        pos_ += 2;
        return;
      }
      if (is_element_symbol(text_.substr(pos_, 1))) {
        atom.element = std::string(text_.substr(pos_, 1));
        pos_ += 1;
        return;
      }
    }
    fail();
  }

  void parse_chirality(BracketAtom &atom) {
    if (peek() != '@') {
      return;
    }
    std::size_t start = pos_++;
    if (peek() == '@') {
      ++pos_;
    } else {
      std::string_view cls = text_.substr(pos_, 2);
      if ((cls == "TH" || cls == "AL" || cls == "SP" || cls == "TB"
           || cls == "OH")
          && is_digit(peek(2))) {
        pos_ += 2;
        read_number();
      }
    }
    atom.chirality = std::string(text_.substr(start, pos_ - start));
  }

  void parse_charge(BracketAtom &atom) {
    char sign = peek();
    if (sign != '+' && sign != '-') {
      return;
    }
    ++pos_;
    int magnitude = 1;
    if (is_digit(peek())) {
      magnitude = read_number();
    } else {
      while (peek() == sign) {
        ++magnitude;
        ++pos_;
      }
    }
    atom.charge = sign == '+' ? magnitude : -magnitude;
  }

  std::string_view text_;
  std::size_t offset_;
  std::size_t pos_ = 0;
};

std::string format_error(std::string_view what, std::size_t position) {
  return std::string(what) + " at position " + std::to_string(position);
}

}  // namespace

std::string_view token_kind_name(TokenKind kind) {
  switch (kind) {
  case TokenKind::kOrganicAtom:
    return "OrganicAtom";
  case TokenKind::kAromaticAtom:
    return "AromaticAtom";
  case TokenKind::kBracketAtom:
    return "BracketAtom";
  case TokenKind::kBond:
    return "Bond";
  case TokenKind::kBranchOpen:
    return "BranchOpen";
  case TokenKind::kBranchClose:
    return "BranchClose";
  case TokenKind::kRingClosure:
    return "RingClosure";
  case TokenKind::kDot:
    return "Dot";
  case TokenKind::kSeparator:
    return "Separator";
  }
  return "?";
}

std::string BracketAtom::to_string() const {
  std::string out = "[";
  if (isotope) {
    out += std::to_string(*isotope);
  }
  out += element;
  out += chirality;
  if (hydrogens > 0) {
    out += 'H';
    if (hydrogens > 1) {
      out += std::to_string(hydrogens);
    }
  }
  if (charge != 0) {
    out += charge > 0 ? '+' : '-';
    int magnitude = charge > 0 ? charge : -charge;
    if (magnitude > 1) {
      out += std::to_string(magnitude);
    }
  }
  if (atom_map) {
    out += ':';
    out += std::to_string(*atom_map);
  }
  out += ']';
  return out;
}

SmilesError::SmilesError(Kind kind, std::size_t position,
                         const std::string &what)
    : InputError(format_error(what, position)), kind_(kind),
      position_(position) { }

TokenSequence tokenize(std::string_view text) {
  TokenSequence tokens;
  std::size_t i = 0;
  auto push = [&](TokenKind kind, std::size_t len) {
    tokens.push_back({ kind, std::string(text.substr(i, len)), std::nullopt });
    i += len;
  };

  while (i < text.size()) {
    char c = text[i];
    char next = i + 1 < text.size() ? text[i + 1] : '\0';
    switch (c) {
    case 'C':
      push(TokenKind::kOrganicAtom, next == 'l' ? 2 : 1);
      break;
    case 'B':
      push(TokenKind::kOrganicAtom, next == 'r' ? 2 : 1);
      break;
    case 'N':
    case 'O':
    case 'P':
    case 'S':
    case 'F':
    case 'I':
      push(TokenKind::kOrganicAtom, 1);
      break;
    case 'b':
    case 'c':
    case 'n':
    case 'o':
    case 'p':
    case 's':
      push(TokenKind::kAromaticAtom, 1);
      break;
    case '-':
    case '=':
    case '#':
    case '/':
    case '\\':
    case ':':
      push(TokenKind::kBond, 1);
      break;
    case '(':
      push(TokenKind::kBranchOpen, 1);
      break;
    case ')':
      push(TokenKind::kBranchClose, 1);
      break;
    case '.':
      push(TokenKind::kDot, 1);
      break;
    case '>':
      push(TokenKind::kSeparator, 1);
      break;
    case '%':
      if (i + 2 < text.size() && is_digit(text[i + 1])
          && is_digit(text[i + 2])) {
        push(TokenKind::kRingClosure, 3);
      } else {
        throw SmilesError(SmilesError::Kind::kUnrecognizedCharacter, i,
                          "'%' must be followed by two digits");
      }
      break;
    case '[': {
      std::size_t close = text.find(']', i + 1);
      if (close == std::string_view::npos) {
        throw SmilesError(SmilesError::Kind::kUnterminatedBracket, i,
                          "unterminated bracket atom");
      }
      BracketParser parser(text.substr(i + 1, close - i - 1), i + 1);
      BracketAtom atom = parser.parse();
      std::size_t len = close - i + 1;
      tokens.push_back({ TokenKind::kBracketAtom,
                         std::string(text.substr(i, len)), std::move(atom) });
      i += len;
      break;
    }
    default:
      if (is_digit(c)) {
        push(TokenKind::kRingClosure, 1);
      } else {
        throw SmilesError(SmilesError::Kind::kUnrecognizedCharacter, i,
                          std::string("unrecognized character '") + c + "'");
      }
    }
  }
  return tokens;
}

int ring_closure_number(const Token &token) {
  std::string_view digits = token.text;
  if (!digits.empty() && digits.front() == '%') {
    digits.remove_prefix(1);
  }
  int value = 0;
  for (char c: digits) {
    value = value * 10 + (c - '0');
  }
  return value;
}

std::string detokenize(std::span<const Token> tokens) {
  std::string out;
  for (const Token &t: tokens) {
    out += t.text;
  }
  return out;
}

std::vector<std::string> token_texts(std::span<const Token> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token &t: tokens) {
    out.push_back(t.text);
  }
  return out;
}

ReactionParts split_reaction(std::string_view text) {
  std::size_t first = text.find('>');
  std::size_t second = first == std::string_view::npos
                           ? std::string_view::npos
                           : text.find('>', first + 1);
  if (second == std::string_view::npos
      || text.find('>', second + 1) != std::string_view::npos) {
    throw SmilesError(SmilesError::Kind::kMalformedReaction,
                      second == std::string_view::npos ? text.size()
                                                       : text.find('>', second + 1),
                      "reaction SMILES needs exactly two '>' separators");
  }
  return { std::string(text.substr(0, first)),
           std::string(text.substr(first + 1, second - first - 1)),
           std::string(text.substr(second + 1)) };
}

std::vector<std::string> split_molecules(std::string_view part) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= part.size()) {
    std::size_t dot = part.find('.', start);
    if (dot == std::string_view::npos) {
      dot = part.size();
    }
    if (dot > start) {
      out.emplace_back(part.substr(start, dot - start));
    }
    start = dot + 1;
  }
  return out;
}

TokenSequence strip_atom_maps(std::span<const Token> tokens) {
  TokenSequence out(tokens.begin(), tokens.end());

  // Bond valence sums per atom token, computed segment by segment between
  // reaction separators. Segments that do not form a valid structure keep
  // their bracket atoms.
  std::map<std::size_t, int> valence_of_token;
  std::size_t seg_start = 0;
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    if (i < tokens.size() && tokens[i].kind != TokenKind::kSeparator) {
      continue;
    }
    auto segment = tokens.subspan(seg_start, i - seg_start);
    try {
      Topology topo = build_topology(segment);
      std::vector<int> sums(topo.atom_tokens.size(), 0);
      for (const auto &e: topo.edges) {
        sums[e.a] += bond_valence(e.order);
        sums[e.b] += bond_valence(e.order);
      }
      for (std::size_t a = 0; a < topo.atom_tokens.size(); ++a) {
        valence_of_token[seg_start + topo.atom_tokens[a]] = sums[a];
      }
    } catch (const InputError &) {
      // Left bracketed.
    }
    seg_start = i + 1;
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    Token &tok = out[i];
    if (tok.kind != TokenKind::kBracketAtom || !tok.bracket->atom_map) {
      continue;
    }
    BracketAtom atom = *tok.bracket;
    atom.atom_map.reset();

    auto sum = valence_of_token.find(i);
    std::string upper = atom.element;
    if (!upper.empty()) {
      upper[0] = static_cast<char>(std::toupper(upper[0]));
    }
    bool simple = sum != valence_of_token.end() && is_organic_subset(upper)
                  && !atom.isotope && atom.chirality.empty()
                  && atom.charge == 0;
    if (simple) {
      auto h = implicit_hydrogen_count(upper, atom.aromatic, sum->second);
      if (h && *h == atom.hydrogens) {
        tok.kind = atom.aromatic ? TokenKind::kAromaticAtom
                                 : TokenKind::kOrganicAtom;
        tok.text = atom.element;
        tok.bracket.reset();
        continue;
      }
    }
    tok.text = atom.to_string();
    tok.bracket = std::move(atom);
  }
  return out;
}

std::string strip_atom_maps(std::string_view text) {
  TokenSequence tokens = tokenize(text);
  return detokenize(strip_atom_maps(tokens));
}

std::string_view validation_issue_name(ValidationIssue::Kind kind) {
  using K = ValidationIssue::Kind;
  switch (kind) {
  case K::kUnclosedBranch:
    return "UnclosedBranch";
  case K::kUnmatchedBranchClose:
    return "UnmatchedBranchClose";
  case K::kEmptyBranch:
    return "EmptyBranch";
  case K::kMisplacedBranch:
    return "MisplacedBranch";
  case K::kUnpairedRingClosure:
    return "UnpairedRingClosure";
  case K::kMisplacedRingClosure:
    return "MisplacedRingClosure";
  case K::kDanglingBond:
    return "DanglingBond";
  case K::kMisplacedDot:
    return "MisplacedDot";
  case K::kTooManySeparators:
    return "TooManySeparators";
  }
  return "?";
}

bool ValidationResult::has(ValidationIssue::Kind kind) const {
  return std::any_of(issues.begin(), issues.end(),
                     [kind](const ValidationIssue &i) { return i.kind == kind; });
}

ValidationResult validate(std::span<const Token> tokens) {
  using K = ValidationIssue::Kind;
  ValidationResult result;
  auto report = [&](K kind, std::size_t index) {
    result.issues.push_back({ kind, index });
  };

  std::vector<std::size_t> open_branches;
  std::map<int, std::size_t> open_rings;
  int separators = 0;

  auto close_segment = [&]() {
    for (std::size_t idx: open_branches) {
      report(K::kUnclosedBranch, idx);
    }
    std::vector<std::size_t> unpaired;
    for (const auto &[digit, idx]: open_rings) {
      unpaired.push_back(idx);
    }
    std::sort(unpaired.begin(), unpaired.end());
    for (std::size_t idx: unpaired) {
      report(K::kUnpairedRingClosure, idx);
    }
    open_branches.clear();
    open_rings.clear();
  };

  auto kind_at = [&](std::size_t i) -> std::optional<TokenKind> {
    if (i >= tokens.size()) {
      return std::nullopt;
    }
    return tokens[i].kind;
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token &tok = tokens[i];
    std::optional<TokenKind> prev =
        i == 0 ? std::nullopt : std::optional(tokens[i - 1].kind);
    std::optional<TokenKind> next = kind_at(i + 1);
    bool prev_bonds = prev
                      && (tokens[i - 1].is_atom()
                          || *prev == TokenKind::kRingClosure
                          || *prev == TokenKind::kBranchClose);

    switch (tok.kind) {
    case TokenKind::kOrganicAtom:
    case TokenKind::kAromaticAtom:
    case TokenKind::kBracketAtom:
      break;
    case TokenKind::kBond: {
      bool before_ok = prev_bonds || prev == TokenKind::kBranchOpen;
      bool after_ok = next
                      && (tokens[i + 1].is_atom()
                          || *next == TokenKind::kRingClosure);
      if (!before_ok || !after_ok) {
        report(K::kDanglingBond, i);
      }
      break;
    }
    case TokenKind::kBranchOpen:
      if (!prev_bonds) {
        report(K::kMisplacedBranch, i);
      }
      open_branches.push_back(i);
      break;
    case TokenKind::kBranchClose:
      if (open_branches.empty()) {
        report(K::kUnmatchedBranchClose, i);
        break;
      }
      if (prev == TokenKind::kBranchOpen) {
        report(K::kEmptyBranch, i);
      }
      open_branches.pop_back();
      break;
    case TokenKind::kRingClosure: {
      bool ok = prev
                && (tokens[i - 1].is_atom() || *prev == TokenKind::kRingClosure
                    || (*prev == TokenKind::kBond && i >= 2
                        && (tokens[i - 2].is_atom()
                            || tokens[i - 2].kind == TokenKind::kRingClosure)));
      if (!ok) {
        report(K::kMisplacedRingClosure, i);
      }
      int digit = ring_closure_number(tok);
      auto it = open_rings.find(digit);
      if (it == open_rings.end()) {
        open_rings.emplace(digit, i);
      } else {
        open_rings.erase(it);
      }
      break;
    }
    case TokenKind::kDot: {
      bool before_ok = prev
                       && (tokens[i - 1].is_atom()
                           || *prev == TokenKind::kRingClosure
                           || *prev == TokenKind::kBranchClose);
      bool after_ok = next && tokens[i + 1].is_atom();
      if (!before_ok || !after_ok || !open_branches.empty()) {
        report(K::kMisplacedDot, i);
      }
      break;
    }
    case TokenKind::kSeparator:
      if (++separators > 2) {
        report(K::kTooManySeparators, i);
      }
      close_segment();
      break;
    }
  }
  close_segment();
  return result;
}

}  // namespace rxnseq
