//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/dataset.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "rxnseq/mol_graph.h"
#include "rxnseq/parallel.h"
#include "rxnseq/smiles.h"

namespace rxnseq {
namespace {

const char *const kSpecialNames[Vocab::kNumSpecials] = {
  "<pad>", "<go>", "<eos>", "<unk>",
};

std::string_view first_field(std::string_view line) {
  auto b = line.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) {
    return {};
  }
  line = line.substr(b);
  return line.substr(0, line.find_first_of(" \t\r\n"));
}

struct LineOutcome {
  std::optional<ReactionRecord> record;
  std::string rule;
  std::string message;
};

LineOutcome ingest_line(std::string_view text, const IngestOptions &options) {
  LineOutcome out;
  std::string stripped;
  ReactionParts parts;
  try {
    stripped = strip_atom_maps(text);
    parts = split_reaction(stripped);
  } catch (const InputError &e) {
    out.rule = kRejectParse;
    out.message = e.what();
    return out;
  }
  std::size_t source_chars = parts.reactants.size() + 1 + parts.reagents.size();
  auto products = split_molecules(parts.products);
  if (source_chars > options.max_source_chars) {
    out.rule = kRejectSourceLength;
  } else if (parts.products.size() > options.max_product_chars) {
    out.rule = kRejectProductLength;
  } else if (products.size() > options.max_products) {
    out.rule = kRejectProductCount;
  } else if (products.empty()) {
    out.rule = kRejectNoProducts;
  }
  if (!out.rule.empty()) {
    return out;
  }

  ReactionRecord r = ReactionRecord::from_string(stripped, ReactionSource::kIngested);
  if (options.normalize) {
    try {
      r = normalize(r);
    } catch (const InputError &e) {
      out.rule = kRejectNormalize;
      out.message = e.what();
      return out;
    }
  }
  out.record = std::move(r);
  return out;
}

std::vector<std::string> canonical_part(const std::vector<std::string> &part) {
  std::vector<std::string> out;
  for (const std::string &m: part) {
    // A list entry may itself hold several dot-separated molecules.
    for (const std::string &piece: split_molecules(m)) {
      try {
        out.push_back(canonical_smiles(piece));
      } catch (const InputError &e) {
        throw CanonicalizationError(piece, e.what());
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void add_counts(std::map<std::string, std::size_t> &counts,
                const std::vector<std::string> &tokens) {
  for (const auto &t: tokens) {
    ++counts[t];
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename T>
void seeded_shuffle(std::vector<T> &v, std::mt19937_64 &rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng() % i;
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

void IngestReport::write_tsv(std::ostream &out) const {
  out << "lines\t" << lines << '\n';
  out << "accepted\t" << accepted << '\n';
  for (std::string_view rule: { kRejectParse, kRejectSourceLength,
                                kRejectProductLength, kRejectProductCount,
                                kRejectNoProducts, kRejectNormalize }) {
    auto it = rejected.find(std::string(rule));
    out << rule << '\t' << (it == rejected.end() ? 0 : it->second) << '\n';
  }
}

IngestResult ingest(std::istream &in, const IngestOptions &options) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string raw;
  for (std::size_t n = 1; std::getline(in, raw); ++n) {
    std::string_view field = first_field(raw);
    if (!field.empty()) {
      lines.emplace_back(n, std::string(field));
    }
  }

  std::vector<LineOutcome> outcomes(lines.size());
  parallel_for(lines.size(), [&](std::size_t i) {
    outcomes[i] = ingest_line(lines[i].second, options);
  });

  IngestResult result;
  IngestReport &report = result.report;
  report.lines = lines.size();
  for (std::string_view rule: { kRejectParse, kRejectSourceLength,
                                kRejectProductLength, kRejectProductCount,
                                kRejectNoProducts, kRejectNormalize }) {
    report.rejected[std::string(rule)] = 0;
  }
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].record) {
      result.records.push_back(std::move(*outcomes[i].record));
      ++report.accepted;
    } else {
      ++report.rejected[outcomes[i].rule];
      report.issues.push_back({ lines[i].first, outcomes[i].rule,
                                outcomes[i].message });
    }
  }
  return result;
}

IngestResult ingest(const std::filesystem::path &path, const IngestOptions &options) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open corpus " + path.string());
  }
  return ingest(in, options);
}

CanonicalizationError::CanonicalizationError(std::string part,
                                             const std::string &what)
    : InputError("cannot canonicalize '" + part + "': " + what),
      part_(std::move(part)) {}

ReactionRecord normalize(const ReactionRecord &r) {
  ReactionRecord out;
  out.reactants = canonical_part(r.reactants);
  out.reagents = canonical_part(r.reagents);
  out.products = canonical_part(r.products);
  out.source = r.source;
  return out;
}

std::vector<std::string> source_tokens(const ReactionRecord &r) {
  return token_texts(tokenize(r.source_text()));
}

std::vector<std::string> target_tokens(const ReactionRecord &r) {
  return token_texts(tokenize(r.product_text()));
}

Vocab::Vocab() {
  for (const char *name: kSpecialNames) {
    append(name);
  }
}

void Vocab::append(std::string token) {
  if (ids_.count(token)) {
    throw InputError("duplicate vocabulary token '" + token + "'");
  }
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocab Vocab::from_counts(const std::map<std::string, std::size_t> &counts) {
  std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(),
                                                           counts.end());
  std::stable_sort(entries.begin(), entries.end(), [](const auto &a, const auto &b) {
    return a.second > b.second;
  });
  Vocab v;
  for (auto &[token, count]: entries) {
    v.append(token);
  }
  return v;
}

Vocab Vocab::read(std::istream &in) {
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      throw InputError("empty line in vocabulary file");
    }
    v.append(line);
  }
  return v;
}

Vocab Vocab::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open vocabulary " + path.string());
  }
  return read(in);
}

void Vocab::write(std::ostream &out) const {
  for (std::size_t i = kNumSpecials; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\n';
  }
}

void Vocab::save(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot write vocabulary " + path.string());
  }
  write(out);
}

std::optional<int> Vocab::find(std::string_view token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) {
    return std::nullopt;
  }
  return it->second;
}

int Vocab::id_of(std::string_view token) const {
  return find(token).value_or(kUnk);
}

const std::string &Vocab::token_of(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw InputError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

std::vector<int> Vocab::encode(const std::vector<std::string> &tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto &t: tokens) {
    out.push_back(id_of(t));
  }
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int> &ids) const {
  std::vector<std::string> out;
  for (int id: ids) {
    if (id == kEos) {
      break;
    }
    if (id == kPad || id == kGo) {
      continue;
    }
    out.push_back(token_of(id));
  }
  return out;
}

VocabPair build_vocab(const std::vector<ReactionRecord> &records) {
  std::map<std::string, std::size_t> in_counts, out_counts;
  for (const auto &r: records) {
    add_counts(in_counts, source_tokens(r));
    add_counts(out_counts, target_tokens(r));
  }
  return { Vocab::from_counts(in_counts), Vocab::from_counts(out_counts) };
}

BucketSpec::BucketSpec(std::vector<Bucket> buckets): buckets_(std::move(buckets)) {
  if (buckets_.empty()) {
    throw BucketSpecError("bucket list is empty");
  }
  for (std::size_t i = 0; i < buckets_.size(); ++i) {
    if (buckets_[i].encoder_length < 1 || buckets_[i].decoder_length < 2) {
      throw BucketSpecError("bucket " + std::to_string(i) + " is too small");
    }
    if (i > 0
        && (buckets_[i].encoder_length <= buckets_[i - 1].encoder_length
            || buckets_[i].decoder_length <= buckets_[i - 1].decoder_length)) {
      throw BucketSpecError("buckets must increase strictly in both lengths");
    }
  }
}

BucketSpec BucketSpec::parse(std::string_view text) {
  std::vector<Bucket> buckets;
  auto number = [&](std::string_view s) {
    int v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
      throw BucketSpecError("bad bucket list '" + std::string(text) + "'");
    }
    return v;
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    std::string_view item = text.substr(start, comma - start);
    auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw BucketSpecError("bad bucket '" + std::string(item) + "'");
    }
    buckets.push_back({ number(item.substr(0, colon)), number(item.substr(colon + 1)) });
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return BucketSpec(std::move(buckets));
}

BucketSpec BucketSpec::standard() {
  return BucketSpec({ { 54, 54 }, { 70, 60 }, { 90, 65 }, { 150, 80 } });
}

std::optional<std::size_t> BucketSpec::find(int encoder_length,
                                            int decoder_length) const {
  for (std::size_t i = 0; i < buckets_.size(); ++i) {
    if (buckets_[i].encoder_length >= encoder_length
        && buckets_[i].decoder_length >= decoder_length) {
      return i;
    }
  }
  return std::nullopt;
}

std::string BucketSpec::to_string() const {
  std::string out;
  for (const auto &b: buckets_) {
    if (!out.empty()) {
      out += ',';
    }
    out += std::to_string(b.encoder_length) + ':' + std::to_string(b.decoder_length);
  }
  return out;
}

TooLongForBuckets::TooLongForBuckets(int encoder_length, int decoder_length)
    : InputError("sequence lengths " + std::to_string(encoder_length) + "/"
                 + std::to_string(decoder_length) + " exceed the largest bucket"),
      encoder_length_(encoder_length), decoder_length_(decoder_length) {}

std::vector<int> encoder_ids(const ReactionRecord &r, const Vocab &input) {
  std::vector<int> ids = input.encode(source_tokens(r));
  std::reverse(ids.begin(), ids.end());
  return ids;
}

EncodedExample encode_example(const ReactionRecord &r, const VocabPair &vocabs,
                              const BucketSpec &buckets) {
  std::vector<int> enc = encoder_ids(r, vocabs.input);
  std::vector<int> dec = { Vocab::kGo };
  for (int id: vocabs.output.encode(target_tokens(r))) {
    dec.push_back(id);
  }
  dec.push_back(Vocab::kEos);

  int enc_len = static_cast<int>(enc.size());
  int dec_len = static_cast<int>(dec.size());
  auto bucket = buckets.find(enc_len, dec_len);
  if (!bucket) {
    throw TooLongForBuckets(enc_len, dec_len);
  }
  const Bucket &b = buckets[*bucket];
  EncodedExample ex;
  ex.bucket = *bucket;
  ex.encoder_ids.assign(b.encoder_length - enc_len, Vocab::kPad);
  ex.encoder_ids.insert(ex.encoder_ids.end(), enc.begin(), enc.end());
  ex.decoder_ids = std::move(dec);
  ex.decoder_ids.resize(b.decoder_length, Vocab::kPad);
  return ex;
}

std::vector<Batch> epoch_batches(const std::vector<EncodedExample> &examples,
                                 std::size_t batch_size, std::uint64_t seed,
                                 std::uint64_t epoch) {
  if (batch_size == 0) {
    throw InputError("batch size must be positive");
  }
  std::mt19937_64 rng(mix_seed(seed, epoch));
  std::map<std::size_t, std::vector<std::size_t>> by_bucket;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    by_bucket[examples[i].bucket].push_back(i);
  }
  std::vector<Batch> batches;
  for (auto &[bucket, members]: by_bucket) {
    seeded_shuffle(members, rng);
    for (std::size_t start = 0; start < members.size(); start += batch_size) {
      std::size_t end = std::min(members.size(), start + batch_size);
      batches.push_back({ bucket, { members.begin() + start, members.begin() + end } });
    }
  }
  seeded_shuffle(batches, rng);
  return batches;
}

BatchStream::BatchStream(const std::vector<EncodedExample> &examples,
                         std::size_t batch_size, std::uint64_t seed)
    : examples_(examples), batch_size_(batch_size), seed_(seed) {
  if (examples_.empty()) {
    throw InputError("batch stream needs at least one example");
  }
  current_ = epoch_batches(examples_, batch_size_, seed_, epoch_);
}

const Batch &BatchStream::next() {
  if (cursor_ == current_.size()) {
    ++epoch_;
    current_ = epoch_batches(examples_, batch_size_, seed_, epoch_);
    cursor_ = 0;
  }
  return current_[cursor_++];
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) {
    perm[i] = i;
  }
  std::mt19937_64 rng(mix_seed(seed, 0));
  seeded_shuffle(perm, rng);
  return perm;
}

SplitResult split_records(const std::vector<ReactionRecord> &records,
                          double valid_fraction, double test_fraction,
                          std::uint64_t seed) {
  if (valid_fraction < 0 || test_fraction < 0 || valid_fraction + test_fraction > 1) {
    throw InputError("split fractions must be non-negative and sum to at most 1");
  }
  auto perm = seeded_permutation(records.size(), seed);
  auto n_valid = static_cast<std::size_t>(valid_fraction * records.size());
  auto n_test = static_cast<std::size_t>(test_fraction * records.size());
  SplitResult out;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const ReactionRecord &r = records[perm[k]];
    if (k < n_test) {
      out.test.push_back(r);
    } else if (k < n_test + n_valid) {
      out.valid.push_back(r);
    } else {
      out.train.push_back(r);
    }
  }
  return out;
}

std::vector<ReactionRecord> read_records(const std::filesystem::path &path,
                                         ReactionSource source) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  std::vector<ReactionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view field = first_field(line);
    if (!field.empty()) {
      out.push_back(ReactionRecord::from_string(field, source));
    }
  }
  return out;
}

void write_records(const std::filesystem::path &path,
                   const std::vector<ReactionRecord> &records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot write " + path.string());
  }
  for (const auto &r: records) {
    out << r.to_string() << '\n';
  }
}

}  // namespace rxnseq
