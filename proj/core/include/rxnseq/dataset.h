//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_DATASET_H_
#define RXNSEQ_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rxnseq/error.h"
#include "rxnseq/reaction.h"

namespace rxnseq {

struct IngestOptions {
  // Character limits on the map-stripped reaction string.
  std::size_t max_source_chars = 150;  // text before the second '>'
  std::size_t max_product_chars = 80;  // text after the second '>'
  std::size_t max_products = 3;
  bool normalize = true;
};

// Rejection rule names, in the order the rules are checked.
inline constexpr std::string_view kRejectParse = "parse_error";
inline constexpr std::string_view kRejectSourceLength = "source_length";
inline constexpr std::string_view kRejectProductLength = "product_length";
inline constexpr std::string_view kRejectProductCount = "product_count";
inline constexpr std::string_view kRejectNoProducts = "no_products";
inline constexpr std::string_view kRejectNormalize = "normalize_error";

struct IngestIssue {
  std::size_t line;  // 1-based
  std::string rule;
  std::string message;
};

struct IngestReport {
  std::size_t lines = 0;  // non-blank input lines
  std::size_t accepted = 0;
  std::map<std::string, std::size_t> rejected;  // every rule, zero included
  std::vector<IngestIssue> issues;

  // Tab-separated "rule<TAB>count" lines.
  void write_tsv(std::ostream &out) const;
};

struct IngestResult {
  std::vector<ReactionRecord> records;
  IngestReport report;
};

// One reaction per line; the first whitespace-separated field is the
// reaction SMILES, further columns are ignored. Bad lines are counted and
// skipped, never fatal. Record order follows the input.
IngestResult ingest(std::istream &in, const IngestOptions &options = {});
IngestResult ingest(const std::filesystem::path &path,
                    const IngestOptions &options = {});

class CanonicalizationError: public InputError {
public:
  CanonicalizationError(std::string part, const std::string &what);
  const std::string &part() const { return part_; }

private:
  std::string part_;
};

// Canonicalizes every molecule and sorts each part. Idempotent.
ReactionRecord normalize(const ReactionRecord &r);

// Token texts of "reactants>reagents>" and of the product part.
std::vector<std::string> source_tokens(const ReactionRecord &r);
std::vector<std::string> target_tokens(const ReactionRecord &r);

class Vocab {
public:
  static constexpr int kPad = 0;
  static constexpr int kGo = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  // Specials only.
  Vocab();

  // Non-special ids by descending count, ties in byte order.
  static Vocab from_counts(const std::map<std::string, std::size_t> &counts);

  // One token per line; line i holds id i + kNumSpecials.
  static Vocab read(std::istream &in);
  static Vocab load(const std::filesystem::path &path);
  void write(std::ostream &out) const;
  void save(const std::filesystem::path &path) const;

  std::size_t size() const { return tokens_.size(); }
  std::optional<int> find(std::string_view token) const;
  int id_of(std::string_view token) const;  // kUnk when absent
  const std::string &token_of(int id) const;

  std::vector<int> encode(const std::vector<std::string> &tokens) const;
  // Stops at EOS; PAD and GO are skipped.
  std::vector<std::string> decode(const std::vector<int> &ids) const;

  bool operator==(const Vocab &other) const { return tokens_ == other.tokens_; }

private:
  void append(std::string token);

  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> ids_;
};

struct VocabPair {
  Vocab input;   // reactant and reagent tokens, including '.' and '>'
  Vocab output;  // product tokens
};

VocabPair build_vocab(const std::vector<ReactionRecord> &records);

struct Bucket {
  int encoder_length;
  int decoder_length;

  bool operator==(const Bucket &other) const = default;
};

class BucketSpecError: public InputError {
public:
  using InputError::InputError;
};

class BucketSpec {
public:
  // Throws BucketSpecError unless strictly increasing in both lengths.
  explicit BucketSpec(std::vector<Bucket> buckets);

  // "54:54,70:60,90:65,150:80".
  static BucketSpec parse(std::string_view text);
  static BucketSpec standard();

  const std::vector<Bucket> &buckets() const { return buckets_; }
  std::size_t size() const { return buckets_.size(); }
  const Bucket &operator[](std::size_t i) const { return buckets_[i]; }
  std::optional<std::size_t> find(int encoder_length, int decoder_length) const;
  std::string to_string() const;

  bool operator==(const BucketSpec &other) const = default;

private:
  std::vector<Bucket> buckets_;
};

class TooLongForBuckets: public InputError {
public:
  TooLongForBuckets(int encoder_length, int decoder_length);
  int encoder_length() const { return encoder_length_; }
  int decoder_length() const { return decoder_length_; }

private:
  int encoder_length_;
  int decoder_length_;
};

struct EncodedExample {
  std::vector<int> encoder_ids;  // PADs, then the reversed source
  std::vector<int> decoder_ids;  // GO, target, EOS, then PADs
  std::size_t bucket = 0;
};

// Unpadded encoder ids: reversed source tokens, UNK for unknown tokens.
std::vector<int> encoder_ids(const ReactionRecord &r, const Vocab &input);

EncodedExample encode_example(const ReactionRecord &r, const VocabPair &vocabs,
                              const BucketSpec &buckets);

struct Batch {
  std::size_t bucket;
  std::vector<std::size_t> examples;  // indices into the example list
};

// All batches of one epoch. Examples are shuffled within their bucket,
// chunked into full batches plus one final partial batch per bucket, and the
// batch order is shuffled. Fully determined by (seed, epoch).
std::vector<Batch> epoch_batches(const std::vector<EncodedExample> &examples,
                                 std::size_t batch_size, std::uint64_t seed,
                                 std::uint64_t epoch);

// Endless batch stream over successive epochs.
class BatchStream {
public:
  BatchStream(const std::vector<EncodedExample> &examples,
              std::size_t batch_size, std::uint64_t seed);

  // Requires at least one example.
  const Batch &next();
  std::uint64_t epoch() const { return epoch_; }

private:
  const std::vector<EncodedExample> &examples_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<Batch> current_;
  std::size_t cursor_ = 0;
};

// Deterministic permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

struct SplitResult {
  std::vector<ReactionRecord> train;
  std::vector<ReactionRecord> valid;
  std::vector<ReactionRecord> test;
};

// Seeded random split; fractions must be non-negative and sum to at most 1.
SplitResult split_records(const std::vector<ReactionRecord> &records,
                          double valid_fraction, double test_fraction,
                          std::uint64_t seed);

// One reaction string per line.
std::vector<ReactionRecord> read_records(const std::filesystem::path &path,
                                         ReactionSource source);
void write_records(const std::filesystem::path &path,
                   const std::vector<ReactionRecord> &records);

}  // namespace rxnseq

#endif  // RXNSEQ_DATASET_H_
