//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "rxnseq/mol_graph.h"

namespace rxnseq {
namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

// Streaming FNV-1a over a little-endian serialization of the environment.
class EnvironmentHasher {
public:
  void add_byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= kFnvPrime;
  }

  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      add_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }

  void add(std::string_view s) {
    add(static_cast<std::uint64_t>(s.size()));
    for (char c: s) {
      add_byte(static_cast<std::uint8_t>(c));
    }
  }

  std::uint64_t value() const { return state_; }

private:
  std::uint64_t state_ = kFnvOffset;
};

std::uint64_t as_u64(int v) {
  return static_cast<std::uint64_t>(static_cast<std::int64_t>(v));
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  EnvironmentHasher h;
  for (std::uint8_t b: bytes) {
    h.add_byte(b);
  }
  return h.value();
}

Fingerprint::Fingerprint(int nbits, int radius)
    : nbits_(nbits), radius_(radius) {
  if (nbits <= 0 || !std::has_single_bit(static_cast<unsigned>(nbits))) {
    throw FingerprintError("fingerprint width must be a power of two");
  }
  if (radius < 0) {
    throw FingerprintError("fingerprint radius must be non-negative");
  }
  words_.assign((nbits + 63) / 64, 0);
}

void Fingerprint::set(int bit) {
  words_[bit / 64] |= std::uint64_t { 1 } << (bit % 64);
}

bool Fingerprint::test(int bit) const {
  return ((words_[bit / 64] >> (bit % 64)) & 1U) != 0;
}

int Fingerprint::count() const {
  int total = 0;
  for (std::uint64_t w: words_) {
    total += std::popcount(w);
  }
  return total;
}

std::vector<int> Fingerprint::on_bits() const {
  std::vector<int> out;
  for (int i = 0; i < nbits_; ++i) {
    if (test(i)) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<std::vector<std::uint64_t>> morgan_environments(const MolGraph &g,
                                                            int radius) {
  const int n = g.num_atoms();
  std::vector<bool> in_ring = ring_atoms(g);
  std::vector<std::vector<std::uint64_t>> levels;

  std::vector<std::uint64_t> ids(n);
  for (int a = 0; a < n; ++a) {
    const Atom &atom = g.atom(a);
    EnvironmentHasher h;
    h.add(atom.element);
    h.add(as_u64(atom.aromatic ? 1 : 0));
    h.add(as_u64(g.heavy_degree(a)));
    h.add(as_u64(g.total_hydrogens(a)));
    h.add(as_u64(atom.charge));
    h.add(as_u64(in_ring[a] ? 1 : 0));
    h.add(as_u64(atom.isotope.value_or(-1)));
    ids[a] = h.value();
  }
  levels.push_back(ids);

  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (int a = 0; a < n; ++a) {
      std::vector<std::pair<std::uint64_t, std::uint64_t>> nbrs;
      for (int bi: g.incident(a)) {
        const Bond &b = g.bond(bi);
        nbrs.emplace_back(
            static_cast<std::uint64_t>(constitutional_order(b.order)),
            ids[b.other(a)]);
      }
      std::sort(nbrs.begin(), nbrs.end());
      EnvironmentHasher h;
      h.add(as_u64(r));
      h.add(ids[a]);
      for (const auto &[order, id]: nbrs) {
        h.add(order);
        h.add(id);
      }
      next[a] = h.value();
    }
    ids = std::move(next);
    levels.push_back(ids);
  }
  return levels;
}

Fingerprint morgan_fingerprint(const MolGraph &g, int radius, int nbits) {
  Fingerprint fp(nbits, radius);
  for (const auto &level: morgan_environments(g, radius)) {
    for (std::uint64_t id: level) {
      fp.set(static_cast<int>(id % static_cast<std::uint64_t>(nbits)));
    }
  }
  return fp;
}

double tanimoto(const Fingerprint &a, const Fingerprint &b) {
  if (a.nbits() != b.nbits()) {
    throw FingerprintError("fingerprint widths differ ("
                           + std::to_string(a.nbits()) + " vs "
                           + std::to_string(b.nbits()) + ")");
  }
  int both = 0;
  int either = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i) {
    both += std::popcount(a.words()[i] & b.words()[i]);
    either += std::popcount(a.words()[i] | b.words()[i]);
  }
  if (either == 0) {
    return 1.0;
  }
  return static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace rxnseq
