//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "cli.h"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rxnseq/checkpoint.h"
#include "rxnseq/dataset.h"
#include "rxnseq/eval.h"
#include "rxnseq/mol_graph.h"
#include "rxnseq/smiles.h"
#include "rxnseq/templates.h"
#include "rxnseq/training.h"

namespace rxnseq::cli {
namespace {

namespace fs = std::filesystem;

class UsageError: public InputError {
public:
  using InputError::InputError;
};

struct Settings {
  std::vector<std::string> args;  // positional arguments of the subcommand
  std::string data;
  std::string templates;
  std::string substrates;
  std::string checkpoint;
  std::string out;
  std::string report;
  std::string input;
  std::uint64_t seed = 1;
  int hidden_dim = 64;
  int embedding_dim = 64;
  int layers = 3;
  std::string buckets = BucketSpec::standard().to_string();
  std::size_t batch_size = 64;
  std::size_t steps = 1000;
  double lr = 0.5;
  double clip = 5.0;
  double init_scale = 0.08;
  std::string optimizer = "sgd";
  int plateau_window = 0;
  double decay = 0.5;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  std::size_t top_k = 50;
  int radius = kDefaultFingerprintRadius;
  int bits = kDefaultFingerprintBits;
  std::size_t log_every = 100;
  bool quiet = false;
};

struct Context {
  const Settings &s;
  std::ostream &out;
  std::ostream &err;

  void log(const std::string &message) const {
    if (!s.quiet) {
      err << message << '\n';
    }
  }
};

const std::string &require(const std::string &value, const char *flag) {
  if (value.empty()) {
    throw UsageError(std::string("missing required option ") + flag);
  }
  return value;
}

std::vector<std::string> read_lines(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
  }
  return lines;
}

std::ofstream open_output(const fs::path &path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot write " + path.string());
  }
  return out;
}

std::vector<ReactionRecord> normalized(std::vector<ReactionRecord> records) {
  for (ReactionRecord &r: records) {
    r = normalize(r);
  }
  return records;
}

// Reaction input from --input or, for batch commands, every line of --data.
std::vector<ReactionRecord> reaction_inputs(const Settings &s) {
  if (!s.input.empty()) {
    return { normalize(ReactionRecord::from_string(s.input, ReactionSource::kIngested)) };
  }
  if (!s.data.empty()) {
    return normalized(read_records(s.data, ReactionSource::kIngested));
  }
  throw UsageError("expected --input or --data");
}

void cmd_tokenize(const Context &c) {
  if (c.s.args.empty()) {
    throw UsageError("tokenize expects a SMILES argument");
  }
  for (std::size_t i = 0; i < c.s.args.size(); ++i) {
    if (i > 0) {
      c.out << '\n';
    }
    for (const Token &t: tokenize(c.s.args[i])) {
      c.out << t.text << '\n';
    }
  }
}

void cmd_canon(const Context &c) {
  if (c.s.args.empty()) {
    throw UsageError("canon expects a SMILES argument");
  }
  for (const std::string &text: c.s.args) {
    if (text.find('>') != std::string::npos) {
      c.out << normalize(ReactionRecord::from_string(text, ReactionSource::kIngested))
                   .to_string()
            << '\n';
    } else {
      c.out << canonical_smiles(text) << '\n';
    }
  }
}

void cmd_fingerprint(const Context &c) {
  if (c.s.args.empty()) {
    throw UsageError("fingerprint expects a SMILES argument");
  }
  for (const std::string &text: c.s.args) {
    Fingerprint fp = morgan_fingerprint(parse_smiles(text), c.s.radius, c.s.bits);
    std::vector<int> bits = fp.on_bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      c.out << (i ? "," : "") << bits[i];
    }
    c.out << '\n';
  }
}

void cmd_gen(const Context &c) {
  std::vector<ReactionTemplate> templates =
      load_templates(require(c.s.templates, "--templates"));
  std::vector<std::string> raw = read_lines(require(c.s.substrates, "--substrates"));
  const std::string &out = require(c.s.out, "--out");

  SubstrateSet substrates = enumerate_substrates(raw, SubstrateFilter{});
  GenerationResult result = generate_dataset(templates, substrates.molecules);
  write_records(out, result.records);
  if (!c.s.report.empty()) {
    std::ofstream rep = open_output(c.s.report);
    rep << "template\tsubstrate\tmessage\n";
    for (const GenerationFailure &f: result.failures) {
      rep << f.template_name << '\t' << f.substrate << '\t' << f.message << '\n';
    }
  }
  c.log("templates " + std::to_string(templates.size()) + ", substrates " +
        std::to_string(substrates.molecules.size()) + ", invalid substrate lines " +
        std::to_string(substrates.invalid_lines.size()) + ", reactions " +
        std::to_string(result.records.size()) + ", failures " +
        std::to_string(result.failures.size()));
}

void cmd_ingest(const Context &c) {
  IngestResult result = ingest(fs::path(require(c.s.data, "--data")));
  write_records(require(c.s.out, "--out"), result.records);
  if (!c.s.report.empty()) {
    std::ofstream rep = open_output(c.s.report);
    result.report.write_tsv(rep);
  }
  c.log("lines " + std::to_string(result.report.lines) + ", accepted " +
        std::to_string(result.report.accepted));
  for (const auto &[rule, count]: result.report.rejected) {
    if (count > 0) {
      c.log("  rejected " + rule + ": " + std::to_string(count));
    }
  }
}

void cmd_split(const Context &c) {
  std::vector<ReactionRecord> records =
      read_records(require(c.s.data, "--data"), ReactionSource::kIngested);
  fs::path dir = require(c.s.out, "--out");
  fs::create_directories(dir);
  SplitResult split =
      split_records(records, c.s.valid_fraction, c.s.test_fraction, c.s.seed);
  write_records(dir / "train.rsmi", split.train);
  write_records(dir / "valid.rsmi", split.valid);
  write_records(dir / "test.rsmi", split.test);
  c.log("train " + std::to_string(split.train.size()) + ", valid " +
        std::to_string(split.valid.size()) + ", test " +
        std::to_string(split.test.size()));
}

OptimizerKind optimizer_kind(const std::string &name) {
  if (name == "sgd") {
    return OptimizerKind::kSgd;
  }
  if (name == "adam") {
    return OptimizerKind::kAdam;
  }
  throw UsageError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void cmd_train(const Context &c) {
  std::vector<ReactionRecord> records = normalized(
      read_records(require(c.s.data, "--data"), ReactionSource::kIngested));
  const std::string &out = require(c.s.out, "--out");

  ModelConfig config;
  config.num_layers = c.s.layers;
  config.embedding_dim = c.s.embedding_dim;
  config.hidden_dim = c.s.hidden_dim;
  config.buckets = BucketSpec::parse(c.s.buckets);
  config.learning_rate = c.s.lr;
  config.gradient_clip_norm = c.s.clip;
  config.init_scale = c.s.init_scale;
  config.seed = c.s.seed;

  TrainOptions options;
  options.batch_size = c.s.batch_size;
  options.steps = c.s.steps;
  options.seed = c.s.seed;
  options.optimizer.kind = optimizer_kind(c.s.optimizer);
  options.optimizer.plateau_window = c.s.plateau_window;
  options.optimizer.decay_factor = c.s.decay;
  double window = 0;
  std::size_t window_steps = 0;
  options.on_step = [&](std::size_t step, double loss) {
    window += loss;
    ++window_steps;
    if (c.s.log_every > 0 && (step % c.s.log_every == 0 || step == c.s.steps)) {
      char line[96];
      std::snprintf(line, sizeof line, "step %zu loss %.4f", step,
                    window / static_cast<double>(window_steps));
      c.log(line);
      window = 0;
      window_steps = 0;
    }
  };

  TrainLog log;
  TrainedModel model = fit(records, config, options, &log);
  if (fs::path(out).has_parent_path()) {
    fs::create_directories(fs::path(out).parent_path());
  }
  save_model(model, out);
  if (!c.s.report.empty()) {
    std::ofstream rep = open_output(c.s.report);
    rep << "step\tloss\n";
    for (std::size_t i = 0; i < log.losses.size(); ++i) {
      char value[32];
      std::snprintf(value, sizeof value, "%.9g", log.losses[i]);
      rep << i + 1 << '\t' << value << '\n';
    }
  }
  c.log("examples " + std::to_string(log.examples) + ", skipped (too long) " +
        std::to_string(log.skipped) + ", input vocab " +
        std::to_string(model.vocabs.input.size()) + ", output vocab " +
        std::to_string(model.vocabs.output.size()));
}

void cmd_predict(const Context &c) {
  TrainedModel model = load_model(require(c.s.checkpoint, "--checkpoint"));
  for (const ReactionRecord &r: reaction_inputs(c.s)) {
    c.out << translate(model.params, r, model.vocabs, model.config.buckets).products
          << '\n';
  }
}

void cmd_eval(const Context &c) {
  TrainedModel model = load_model(require(c.s.checkpoint, "--checkpoint"));
  std::vector<ReactionRecord> test = normalized(
      read_records(require(c.s.data, "--data"), ReactionSource::kIngested));
  EvalReport report = evaluate(model.params, test, model.vocabs, model.config.buckets);
  if (!c.s.out.empty()) {
    std::ofstream csv = open_output(c.s.out);
    report.write_csv(csv);
  }
  if (!c.s.report.empty()) {
    std::ofstream json = open_output(c.s.report);
    report.write_json(json);
  }
  report.write_json(c.out);
  if (!report.skipped.empty()) {
    c.log("skipped " + std::to_string(report.skipped.size()) +
          " records longer than every bucket");
  }
}

void cmd_export_attention(const Context &c) {
  TrainedModel model = load_model(require(c.s.checkpoint, "--checkpoint"));
  ReactionRecord r = normalize(ReactionRecord::from_string(
      require(c.s.input, "--input"), ReactionSource::kIngested));
  std::ofstream out = open_output(require(c.s.out, "--out"));
  export_attention(model.params, r, model.vocabs, model.config.buckets, out);
}

void cmd_export_embeddings(const Context &c) {
  TrainedModel model = load_model(require(c.s.checkpoint, "--checkpoint"));
  std::ofstream out = open_output(require(c.s.out, "--out"));
  export_embeddings(model.params, model.vocabs, c.s.top_k, out);
}

using Command = std::function<void(const Context &)>;

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  Settings s;
  CLI::App app{ "Reaction product prediction toolkit", "rxnseq" };
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value settings file; flags override it");

  app.add_option("--data", s.data, "Reaction SMILES file, one reaction per line");
  app.add_option("--templates", s.templates, "Reaction template file");
  app.add_option("--substrates", s.substrates, "Substrate SMILES file");
  app.add_option("--checkpoint", s.checkpoint, "Model checkpoint");
  app.add_option("--out", s.out, "Output file or directory");
  app.add_option("--report", s.report, "Report output file");
  app.add_option("--input", s.input, "Single reaction input, e.g. \"CC=C.Cl>>\"");
  app.add_option("--seed", s.seed, "Random seed")->capture_default_str();
  app.add_option("--hidden-dim", s.hidden_dim, "GRU hidden size")->capture_default_str();
  app.add_option("--embedding-dim", s.embedding_dim, "Token embedding size")
      ->capture_default_str();
  app.add_option("--layers", s.layers, "GRU layers")->capture_default_str();
  app.add_option("--buckets", s.buckets, "enc:dec bucket list")->capture_default_str();
  app.add_option("--batch-size", s.batch_size, "Examples per batch")
      ->capture_default_str();
  app.add_option("--steps", s.steps, "Training steps")->capture_default_str();
  app.add_option("--lr", s.lr, "Learning rate")->capture_default_str();
  app.add_option("--clip", s.clip, "Global gradient norm limit")->capture_default_str();
  app.add_option("--init-scale", s.init_scale, "Uniform init half-width")
      ->capture_default_str();
  app.add_option("--optimizer", s.optimizer, "sgd or adam")->capture_default_str();
  app.add_option("--plateau-window", s.plateau_window,
                 "Steps per loss window for learning-rate decay, 0 disables")
      ->capture_default_str();
  app.add_option("--decay", s.decay, "Learning-rate decay factor")->capture_default_str();
  app.add_option("--valid-fraction", s.valid_fraction, "Validation share for split")
      ->capture_default_str();
  app.add_option("--test-fraction", s.test_fraction, "Test share for split")
      ->capture_default_str();
  app.add_option("--top-k", s.top_k, "Most frequent tokens to export")
      ->capture_default_str();
  app.add_option("--radius", s.radius, "Morgan radius")->capture_default_str();
  app.add_option("--bits", s.bits, "Fingerprint width")->capture_default_str();
  app.add_option("--log-every", s.log_every, "Training log interval, 0 disables")
      ->capture_default_str();
  app.add_flag("-q,--quiet", s.quiet, "Suppress progress messages");

  const std::vector<std::tuple<const char *, const char *, bool, Command>> commands = {
    { "tokenize", "Print the tokens of a SMILES or reaction SMILES", true, cmd_tokenize },
    { "canon", "Print canonical SMILES (molecules or reactions)", true, cmd_canon },
    { "fingerprint", "Print Morgan fingerprint bits", true, cmd_fingerprint },
    { "gen", "Apply templates to substrates (--templates --substrates --out)", false,
      cmd_gen },
    { "ingest", "Filter and normalize a reaction file (--data --out)", false,
      cmd_ingest },
    { "split", "Split reactions into train/valid/test files under --out", false,
      cmd_split },
    { "train", "Train a model (--data --out)", false, cmd_train },
    { "predict", "Predict products (--checkpoint, --input or --data)", false,
      cmd_predict },
    { "eval", "Score a test set (--checkpoint --data)", false, cmd_eval },
    { "export-attention", "Attention matrix CSV for one reaction", false,
      cmd_export_attention },
    { "export-embeddings", "Token embedding CSV", false, cmd_export_embeddings },
  };
  std::map<const CLI::App *, Command> dispatch;
  for (const auto &[name, help, positional, fn]: commands) {
    CLI::App *sub = app.add_subcommand(name, help);
    if (positional) {
      sub->add_option("smiles", s.args, "Input strings")->required();
    }
    dispatch[sub] = fn;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  Context ctx{ s, out, err };
  try {
    for (const CLI::App *sub: app.get_subcommands()) {
      dispatch.at(sub)(ctx);
    }
    return kExitOk;
  } catch (const UsageError &e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitInput;
  } catch (const InputError &e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error &e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace rxnseq::cli
