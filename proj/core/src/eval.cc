//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/eval.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include <json.hpp>

#include "rxnseq/mol_graph.h"
#include "rxnseq/parallel.h"
#include "rxnseq/smiles.h"

namespace rxnseq {
namespace {

struct ParsedProducts {
  std::vector<std::string> canonical;  // sorted
  Fingerprint fingerprint;
};

// nullopt when the text is empty or any molecule fails to parse.
std::optional<ParsedProducts> parse_products(std::string_view text) {
  if (text.empty()) {
    return std::nullopt;
  }
  try {
    MolGraph whole = parse_smiles(text);
    std::vector<std::string> canonical;
    for (const std::string &mol: split_molecules(text)) {
      canonical.push_back(canonical_smiles(parse_smiles(mol)));
    }
    std::sort(canonical.begin(), canonical.end());
    return ParsedProducts{ std::move(canonical), morgan_fingerprint(whole) };
  } catch (const InputError &) {
    return std::nullopt;
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// SMILES never needs quoting, but vocabulary files are user input.
std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c: s) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

std::ofstream open_output(const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot write " + path.string());
  }
  return out;
}

void check_written(const std::ofstream &out, const std::filesystem::path &path) {
  if (!out) {
    throw InputError("write failed for " + path.string());
  }
}

ReactionRecord without_products(const ReactionRecord &r) {
  ReactionRecord s = r;
  s.products.clear();
  return s;
}

std::string join_tokens(const std::vector<std::string> &tokens) {
  std::string out;
  for (const std::string &t: tokens) {
    out += t;
  }
  return out;
}

}  // namespace

PredictionScore score_prediction(std::string_view predicted,
                                 std::string_view reference) {
  std::optional<ParsedProducts> ref = parse_products(reference);
  if (!ref) {
    throw ReferenceInvalid("reference products do not parse: " +
                           std::string(reference));
  }
  std::optional<ParsedProducts> pred = parse_products(predicted);
  PredictionScore score;
  if (!pred) {
    return score;
  }
  score.valid = true;
  score.exact = pred->canonical == ref->canonical;
  score.tanimoto = score.exact ? 1.0 : tanimoto(pred->fingerprint, ref->fingerprint);
  return score;
}

SourceInput prepare_source(const ReactionRecord &r, const Vocab &input,
                           const BucketSpec &buckets) {
  std::vector<int> ids = encoder_ids(r, input);
  const int length = static_cast<int>(ids.size());
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (buckets[i].encoder_length >= length) {
      SourceInput s;
      s.bucket = i;
      s.encoder_ids.assign(buckets[i].encoder_length - length, Vocab::kPad);
      s.encoder_ids.insert(s.encoder_ids.end(), ids.begin(), ids.end());
      return s;
    }
  }
  throw TooLongForBuckets(length, 0);
}

template <typename T>
Translation translate(const ModelParams<T> &m, const ReactionRecord &r,
                      const VocabPair &vocabs, const BucketSpec &buckets) {
  Translation t;
  t.source = prepare_source(r, vocabs.input, buckets);
  t.prediction = predict(m, t.source.encoder_ids,
                         buckets[t.source.bucket].decoder_length - 1);
  t.products = join_tokens(vocabs.output.decode(t.prediction.ids));
  return t;
}

void EvalReport::write_csv(std::ostream &out) const {
  out << "index,source,reference,prediction,valid,exact,tanimoto,cross_entropy\n";
  for (const EvalRow &row: rows) {
    out << row.index << ',' << csv_field(row.source) << ','
        << csv_field(row.reference) << ',' << csv_field(row.prediction) << ','
        << (row.score.valid ? 1 : 0) << ',' << (row.score.exact ? 1 : 0) << ','
        << format_double(row.score.tanimoto) << ','
        << format_double(row.cross_entropy) << '\n';
  }
}

void EvalReport::write_json(std::ostream &out) const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["skipped"] = skipped.size();
  j["correct_ratio"] = correct_ratio;
  j["mean_tanimoto"] = mean_tanimoto;
  j["invalid_ratio"] = invalid_ratio;
  j["mean_cross_entropy"] = mean_cross_entropy;
  out << j.dump(2) << '\n';
}

void EvalReport::save(const std::filesystem::path &csv,
                      const std::filesystem::path &json) const {
  {
    std::ofstream out = open_output(csv);
    write_csv(out);
    check_written(out, csv);
  }
  std::ofstream out = open_output(json);
  write_json(out);
  check_written(out, json);
}

template <typename T>
EvalReport evaluate(const ModelParams<T> &m,
                    const std::vector<ReactionRecord> &testset,
                    const VocabPair &vocabs, const BucketSpec &buckets) {
  if (testset.empty()) {
    throw EmptyTestset("test set is empty");
  }
  std::vector<std::optional<EvalRow>> slots(testset.size());
  parallel_for(testset.size(), [&](std::size_t i) {
    const ReactionRecord &r = testset[i];
    EncodedExample example;
    try {
      example = encode_example(r, vocabs, buckets);
    } catch (const TooLongForBuckets &) {
      return;
    }
    EvalRow row;
    row.index = i;
    row.source = r.source_text();
    row.reference = r.product_text();
    row.prediction = translate(m, without_products(r), vocabs, buckets).products;
    row.score = score_prediction(row.prediction, row.reference);
    row.cross_entropy = example_loss(m, example);
    slots[i] = std::move(row);
  });

  EvalReport report;
  double correct = 0, tanimoto_sum = 0, invalid = 0, ce_sum = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) {
      report.skipped.push_back(i);
      continue;
    }
    const EvalRow &row = *slots[i];
    correct += row.score.exact ? 1 : 0;
    invalid += row.score.valid ? 0 : 1;
    tanimoto_sum += row.score.tanimoto;
    ce_sum += row.cross_entropy;
    report.rows.push_back(std::move(*slots[i]));
  }
  report.n = report.rows.size();
  if (report.n == 0) {
    throw EmptyTestset("every test record exceeds the buckets");
  }
  const double n = static_cast<double>(report.n);
  report.correct_ratio = correct / n;
  report.invalid_ratio = invalid / n;
  report.mean_tanimoto = tanimoto_sum / n;
  report.mean_cross_entropy = ce_sum / n;
  return report;
}

template <typename T>
void export_attention(const ModelParams<T> &m, const ReactionRecord &r,
                      const VocabPair &vocabs, const BucketSpec &buckets,
                      std::ostream &out) {
  Translation t = translate(m, r, vocabs, buckets);
  std::vector<std::string> columns;
  for (int id: t.source.encoder_ids) {
    columns.push_back(vocabs.input.token_of(id));
  }
  out << "token";
  for (const char *block: { "score:", "weight:" }) {
    for (const std::string &c: columns) {
      out << ',' << csv_field(block + c);
    }
  }
  out << '\n';
  for (std::size_t s = 0; s < t.prediction.steps.size(); ++s) {
    const AttentionRecord &a = t.prediction.attention[s];
    out << csv_field(vocabs.output.token_of(t.prediction.steps[s]));
    for (double v: a.scores) {
      out << ',' << format_double(v);
    }
    for (double v: a.weights) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

template <typename T>
void export_attention(const ModelParams<T> &m, const ReactionRecord &r,
                      const VocabPair &vocabs, const BucketSpec &buckets,
                      const std::filesystem::path &path) {
  std::ofstream out = open_output(path);
  export_attention(m, r, vocabs, buckets, out);
  check_written(out, path);
}

template <typename T>
void export_embeddings(const ModelParams<T> &m, const VocabPair &vocabs,
                       std::size_t top_k, std::ostream &out) {
  struct Table {
    const char *name;
    const Vocab &vocab;
    const Matrix<T> &embedding;
  };
  const Table tables[] = { { "encoder", vocabs.input, m.encoder_embedding },
                           { "decoder", vocabs.output, m.decoder_embedding } };
  for (const Table &t: tables) {
    if (top_k + Vocab::kNumSpecials > t.vocab.size()) {
      throw InputError(std::string("top_k exceeds the ") + t.name + " vocabulary");
    }
    if (static_cast<std::size_t>(t.embedding.rows()) != t.vocab.size()) {
      throw DimensionMismatch(std::string(t.name) +
                              " embedding rows differ from vocabulary size");
    }
  }
  out << "table,token,rank";
  for (Eigen::Index c = 0; c < m.encoder_embedding.cols(); ++c) {
    out << ",e" << c;
  }
  out << '\n';
  for (const Table &t: tables) {
    for (std::size_t rank = 1; rank <= top_k; ++rank) {
      const int id = static_cast<int>(rank) - 1 + Vocab::kNumSpecials;
      out << t.name << ',' << csv_field(t.vocab.token_of(id)) << ',' << rank;
      for (Eigen::Index c = 0; c < t.embedding.cols(); ++c) {
        out << ',' << format_double(static_cast<double>(t.embedding(id, c)));
      }
      out << '\n';
    }
  }
}

template <typename T>
void export_embeddings(const ModelParams<T> &m, const VocabPair &vocabs,
                       std::size_t top_k, const std::filesystem::path &path) {
  std::ofstream out = open_output(path);
  export_embeddings(m, vocabs, top_k, out);
  check_written(out, path);
}

#define RXNSEQ_INSTANTIATE(T)                                                        \
  template Translation translate(const ModelParams<T> &, const ReactionRecord &,     \
                                 const VocabPair &, const BucketSpec &);             \
  template EvalReport evaluate(const ModelParams<T> &,                               \
                               const std::vector<ReactionRecord> &,                  \
                               const VocabPair &, const BucketSpec &);               \
  template void export_attention(const ModelParams<T> &, const ReactionRecord &,     \
                                 const VocabPair &, const BucketSpec &,              \
                                 std::ostream &);                                    \
  template void export_attention(const ModelParams<T> &, const ReactionRecord &,     \
                                 const VocabPair &, const BucketSpec &,              \
                                 const std::filesystem::path &);                     \
  template void export_embeddings(const ModelParams<T> &, const VocabPair &,         \
                                  std::size_t, std::ostream &);                      \
  template void export_embeddings(const ModelParams<T> &, const VocabPair &,         \
                                  std::size_t, const std::filesystem::path &);

RXNSEQ_INSTANTIATE(float)
RXNSEQ_INSTANTIATE(double)

}  // namespace rxnseq
