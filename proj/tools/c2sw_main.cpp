// Command-line driver: training, evaluation, querying and corpus tooling.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "c2sw/checkpoint.hpp"
#include "c2sw/embedder.hpp"
#include "c2sw/error.hpp"
#include "c2sw/evaluation.hpp"
#include "c2sw/file_io.hpp"
#include "c2sw/noise.hpp"
#include "c2sw/training.hpp"
#include "c2sw/utf8.hpp"
#include "c2sw/vocab.hpp"
#include "json.hpp"

namespace {

using namespace c2sw;

constexpr int kConfigVersion = 1;

// Runs one pipeline stage, prefixing any failure with the stage name.
template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const NumericError& e) {
    throw NumericError(name + ": " + e.what());
  } catch (const Error& e) {
    throw Error(name + ": " + e.what());
  }
}

void emit(const std::optional<std::string>& path, const std::string& text) {
  if (path) {
    stage("writing " + *path, [&] { write_file(*path, text); });
  } else {
    std::cout << text;
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  return stage("reading " + path, [&] {
    std::vector<std::string> lines;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    return lines;
  });
}

struct Data {
  std::string vocab;
  std::string table;

  void add(CLI::App* cmd) {
    cmd->add_option("--vocab", vocab, "Vocabulary file, one entry per line")->required();
    cmd->add_option("--table", table, "Embedding table (text or binary)")->required();
  }
  Vocabulary load_vocab() const {
    return stage("loading vocabulary " + vocab, [&] { return Vocabulary::load(vocab); });
  }
  EmbeddingTable load_table(const Vocabulary& v) const {
    return stage("loading table " + table, [&] {
      EmbeddingTable t = EmbeddingTable::load(table);
      if (t.size() != v.size()) {
        throw Error("table has " + std::to_string(t.size()) + " rows but the vocabulary has " +
                    std::to_string(v.size()) + " entries");
      }
      return t;
    });
  }
};

struct ModelFlags {
  std::size_t d_char = 64;
  std::size_t n_layers = 8;
  std::size_t n_heads = 8;
  std::size_t max_chars = 32;
  bool standard_preln = false;
  bool no_marker = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--d-char", d_char, "Character model width d'")->capture_default_str();
    cmd->add_option("--layers", n_layers, "Transformer layers")->capture_default_str();
    cmd->add_option("--heads", n_heads, "Attention heads per layer")->capture_default_str();
    cmd->add_option("--max-chars", max_chars, "Maximum characters per token")
        ->capture_default_str();
    cmd->add_flag("--standard-preln", standard_preln,
                  "Use the usual pre-LN residual instead of adding the normalized input");
    cmd->add_flag("--no-marker", no_marker, "Do not prefix full words with the ## marker");
  }
  ModelConfig config(std::size_t d_out) const {
    ModelConfig c;
    c.d_char = d_char;
    c.d_out = d_out;
    c.n_layers = n_layers;
    c.n_heads = n_heads;
    c.max_chars = max_chars;
    c.standard_preln = standard_preln;
    c.marker_on_full_words = !no_marker;
    stage("model configuration", [&] { c.validate(); });
    return c;
  }
};

struct NoiseFlags {
  std::string layouts;
  double p_noise = 0.5;
  std::vector<std::string> ops;
  std::size_t min_length = 5;
  std::string punctuation = "()-.,':;";

  void add(CLI::App* cmd, double default_p) {
    p_noise = default_p;
    cmd->add_option("--layouts", layouts, "Keyboard layouts JSON (enables mistype)");
    cmd->add_option("--noise-p", p_noise, "Probability a token is noised")->capture_default_str();
    cmd->add_option("--noise-ops", ops,
                    "Comma-separated ops: mistype,repeat,swap,drop,toggle,punctuation "
                    "(default: all, mistype only with --layouts)")
        ->delimiter(',');
    cmd->add_option("--min-length", min_length, "Minimum editable characters")
        ->capture_default_str();
    cmd->add_option("--punctuation", punctuation, "Characters the punctuation op inserts")
        ->capture_default_str();
  }
  NoiseConfig config() const {
    return stage("noise configuration", [&] {
      NoiseConfig c;
      if (!layouts.empty()) c.layouts = load_layouts(layouts);
      if (ops.empty()) {
        c.enabled_ops.clear();
        for (NoiseOp op : kAllNoiseOps) {
          if (op != NoiseOp::kMistype || !c.layouts.empty()) c.enabled_ops.push_back(op);
        }
      } else {
        c.enabled_ops.clear();
        for (const auto& name : ops) c.enabled_ops.push_back(parse_noise_op(name));
      }
      c.p_noise = p_noise;
      c.min_length = min_length;
      c.punctuation = utf8::decode(punctuation);
      c.validate();
      return c;
    });
  }
};

// Either a trained checkpoint or the table-lookup stub (e_hat = e).
struct Predictor {
  std::string checkpoint;
  bool identity = false;

  void add(CLI::App* cmd) {
    auto* ck = cmd->add_option("--checkpoint", checkpoint, "Trained char2subword checkpoint");
    auto* id = cmd->add_flag("--identity", identity,
                             "Use table rows as predictions (baseline stub, no checkpoint)");
    ck->excludes(id);
  }
  std::optional<Char2Subword> load(const EmbeddingTable& table) const {
    if (identity) return std::nullopt;
    if (checkpoint.empty()) throw Error("either --checkpoint or --identity is required");
    Char2Subword m = stage("loading checkpoint " + checkpoint,
                           [&] { return load_checkpoint(checkpoint); });
    if (m.config().d_out != table.dim()) {
      throw Error("checkpoint output width " + std::to_string(m.config().d_out) +
                  " differs from table width " + std::to_string(table.dim()));
    }
    return m;
  }
};

std::string default_metrics_path(const std::string& out) { return out + ".metrics.jsonl"; }

// ---------------------------------------------------------------------------

struct Simulate {
  Data data;
  ModelFlags model;
  NoiseFlags noise;
  std::uint64_t seed = 0;
  std::string init;
  std::string out;
  std::string metrics;
  bool timing = false;
  TrainConfig train;
  std::optional<double> grad_clip;
  bool no_eval = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate", "Train the module to reproduce the table rows");
    data.add(cmd);
    model.add(cmd);
    noise.add(cmd, 0.5);
    cmd->add_option("--seed", seed, "Random seed")->required();
    cmd->add_option("--init", init, "Start from this checkpoint instead of a fresh model");
    cmd->add_option("--out", out, "Checkpoint to write")->required();
    cmd->add_option("--metrics", metrics, "Per-epoch JSONL log (default: <out>.metrics.jsonl)");
    cmd->add_flag("--timing", timing, "Record wall time in the metrics log");
    cmd->add_option("--epochs", train.epochs)->capture_default_str();
    cmd->add_option("--batch-size", train.batch_size)->capture_default_str();
    cmd->add_option("--accumulation", train.accumulation, "Batches per update")
        ->capture_default_str();
    cmd->add_option("--lr", train.adam.step, "Adam step size")->capture_default_str();
    cmd->add_option("--beta1", train.adam.beta1)->capture_default_str();
    cmd->add_option("--beta2", train.adam.beta2)->capture_default_str();
    cmd->add_option("--adam-eps", train.adam.eps)->capture_default_str();
    cmd->add_option("--grad-clip", grad_clip, "Clip the global gradient norm");
    cmd->add_option("--w-cos", train.weights.cos, "Cosine loss weight")->capture_default_str();
    cmd->add_option("--w-ce", train.weights.ce, "Cross-entropy loss weight")
        ->capture_default_str();
    cmd->add_option("--w-l2", train.weights.l2, "L2 loss weight")->capture_default_str();
    cmd->add_option("--w-nbr", train.weights.nbr, "Neighbor loss weight")->capture_default_str();
    cmd->add_flag("--squared-l2", train.weights.squared_l2, "Use the squared L2 distance");
    cmd->add_option("--loss-neighbors", train.loss_neighbors, "k for the neighbor loss")
        ->capture_default_str();
    cmd->add_option("--eval-k", train.eval_k, "Depth of the per-epoch precision")
        ->capture_default_str();
    cmd->add_flag("--no-eval", no_eval, "Skip the per-epoch clean evaluation");
    cmd->add_flag("--full-word-variants", train.include_full_word_variants,
                  "Also train on ##-marked full-word variants");
    cmd->callback([this] { run(); });
  }

  void run() {
    const Vocabulary vocab = data.load_vocab();
    const EmbeddingTable table = data.load_table(vocab);
    train.seed = seed;
    train.noise = noise.config();
    train.grad_clip = grad_clip;
    train.evaluate_each_epoch = !no_eval;
    stage("training configuration", [&] { train.validate(); });
    Char2Subword m;
    if (!init.empty()) {
      m = stage("loading checkpoint " + init, [&] { return load_checkpoint(init); });
    } else {
      m = Char2Subword::initialize(model.config(table.dim()),
                                   training_alphabet(vocab, train.noise), seed);
    }
    const std::uint64_t before = table.checksum();
    SimulationResult result = stage("simulation", [&] {
      return train_simulation(std::move(m), vocab, table, train, [](const EpochMetrics& e) {
        std::cerr << "epoch " << e.epoch << " loss " << format_double(e.loss.total)
                  << " accuracy " << format_double(e.accuracy) << "\n";
      });
    });
    if (table.checksum() != before) throw Error("simulation: embedding table was modified");
    stage("writing checkpoint " + out, [&] { save_checkpoint(out, result.model); });
    emit(metrics.empty() ? default_metrics_path(out) : metrics,
         metrics_to_jsonl(result.log, timing));
  }
};

struct Pretrain {
  Data data;
  ModelFlags model;
  std::string corpus;
  std::uint64_t seed = 0;
  std::string init;
  std::string out;
  std::string metrics;
  PretrainConfig pre;
  std::optional<double> grad_clip;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("pretrain", "Character-level masked language modeling");
    data.add(cmd);
    model.add(cmd);
    cmd->add_option("--corpus", corpus, "Text corpus, one sentence per line")->required();
    cmd->add_option("--seed", seed, "Random seed")->required();
    cmd->add_option("--init", init, "Start from this checkpoint instead of a fresh model");
    cmd->add_option("--out", out, "Checkpoint to write")->required();
    cmd->add_option("--metrics", metrics, "Per-epoch JSONL log (default: <out>.metrics.jsonl)");
    cmd->add_option("--epochs", pre.epochs)->capture_default_str();
    cmd->add_option("--batch-size", pre.batch_size, "Sentences per update")->capture_default_str();
    cmd->add_option("--lr", pre.adam.step, "Adam step size")->capture_default_str();
    cmd->add_option("--beta1", pre.adam.beta1)->capture_default_str();
    cmd->add_option("--beta2", pre.adam.beta2)->capture_default_str();
    cmd->add_option("--adam-eps", pre.adam.eps)->capture_default_str();
    cmd->add_option("--grad-clip", grad_clip, "Clip the global gradient norm");
    cmd->add_option("--select-prob", pre.masking.select_prob, "Token selection probability")
        ->capture_default_str();
    cmd->add_option("--mask-prob", pre.masking.mask_prob, "Share of characters masked")
        ->capture_default_str();
    cmd->add_option("--random-prob", pre.masking.random_prob, "Share of characters randomized")
        ->capture_default_str();
    cmd->callback([this] { run(); });
  }

  void run() {
    const Vocabulary vocab = data.load_vocab();
    const EmbeddingTable table = data.load_table(vocab);
    pre.seed = seed;
    pre.grad_clip = grad_clip;
    stage("pre-training configuration", [&] { pre.validate(); });
    const Corpus ids = stage("tokenizing corpus", [&] {
      Corpus c = corpus_to_ids(read_lines(corpus), vocab);
      if (c.empty()) throw Error("corpus " + corpus + " has no tokens");
      return c;
    });
    Char2Subword m;
    if (!init.empty()) {
      m = stage("loading checkpoint " + init, [&] { return load_checkpoint(init); });
    } else {
      m = Char2Subword::initialize(model.config(table.dim()),
                                   training_alphabet(vocab, disabled_noise()), seed);
    }
    const std::uint64_t before = table.checksum();
    const PretrainResult result =
        stage("pre-training", [&] { return pretrain_mlm(std::move(m), ids, vocab, table, pre); });
    if (table.checksum() != before) throw Error("pre-training: embedding table was modified");
    stage("writing checkpoint " + out, [&] { save_checkpoint(out, result.model); });
    std::string log;
    for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
      nlohmann::ordered_json rec;
      rec["epoch"] = e + 1;
      rec["mlm_loss"] = result.epoch_losses[e];
      rec["selected"] = result.epoch_selected[e];
      log += rec.dump() + "\n";
    }
    emit(metrics.empty() ? default_metrics_path(out) : metrics, log);
  }
};

struct Eval {
  Data data;
  Predictor predictor;
  std::size_t k = kDefaultPrecisionDepth;
  std::optional<std::string> out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "Accuracy and neighbor precision over the vocabulary");
    data.add(cmd);
    predictor.add(cmd);
    cmd->add_option("--k", k, "Report precision at 1..k")->capture_default_str();
    cmd->add_option("--out", out, "Report file (default: stdout)");
    cmd->callback([this] { run(); });
  }

  void run() {
    const Vocabulary vocab = data.load_vocab();
    const EmbeddingTable table = data.load_table(vocab);
    const auto model = predictor.load(table);
    const PrecisionReport report = stage("evaluation", [&] {
      if (k == 0 || k > table.size()) {
        throw Error("--k must lie in 1.." + std::to_string(table.size()));
      }
      const NeighborIndex index = build_neighbor_index(table, k);
      if (model) return evaluate_model(*model, vocab, table, index, k);
      const std::vector<TokenId> ids = vocab.regular_ids();
      std::vector<Vector> preds;
      for (TokenId id : ids) preds.emplace_back(table.row(id).begin(), table.row(id).end());
      PrecisionReport r = precision_at_k(preds, ids, table, index, k);
      r.accuracy = accuracy(preds, ids, table);
      return r;
    });
    emit(out, report.to_text());
  }
};

struct Neighbors {
  Data data;
  Predictor predictor;
  std::string query;
  std::size_t k = 10;
  bool full_word = false;
  std::optional<std::string> out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("neighbors", "Nearest table rows to a token's embedding");
    data.add(cmd);
    predictor.add(cmd);
    cmd->add_option("query", query, "Token or word to embed")->required();
    cmd->add_option("--k", k, "Number of neighbors")->capture_default_str();
    cmd->add_flag("--full-word", full_word, "Embed the query as a full word");
    cmd->add_option("--out", out, "Output file (default: stdout)");
    cmd->callback([this] { run(); });
  }

  void run() {
    const Vocabulary vocab = data.load_vocab();
    const EmbeddingTable table = data.load_table(vocab);
    const auto model = predictor.load(table);
    const std::vector<Neighbor> result = stage("neighbor query", [&] {
      if (model) return neighbor_query(*model, table, vocab, query, full_word, k);
      if (k > table.size()) {
        throw Error("requested " + std::to_string(k) + " neighbors from a table of " +
                    std::to_string(table.size()) + " rows");
      }
      const auto id = vocab.find(query);
      if (!id) throw Error("'" + query + "' is not a vocabulary entry (required with --identity)");
      std::vector<Neighbor> n;
      if (k == 0) return n;
      for (const auto& [nid, cos] : top_k_by_cosine(table, table.row(*id), k)) {
        n.push_back({vocab.token(nid), cos});
      }
      return n;
    });
    std::string text;
    for (std::size_t i = 0; i < result.size(); ++i) {
      text += std::to_string(i + 1) + "\t" + result[i].token + "\t" +
              format_double(result[i].cosine) + "\n";
    }
    emit(out, text);
  }
};

struct Noise {
  NoiseFlags noise;
  std::string in;
  std::string out;
  std::uint64_t seed = 0;
  std::optional<std::string> report;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("noise", "Apply single-character noise to every word of a corpus");
    noise.add(cmd, 0.5);
    cmd->add_option("--in", in, "Input corpus")->required();
    cmd->add_option("--out", out, "Noised corpus to write")->required();
    cmd->add_option("--seed", seed, "Random seed")->required();
    cmd->add_option("--report", report, "Per-op counts as JSON (default: stdout summary)");
    cmd->callback([this] { run(); });
  }

  void run() {
    const NoiseConfig config = noise.config();
    const std::string text = stage("reading " + in, [&] { return read_file(in); });
    Rng rng(seed);
    std::map<std::string, std::size_t> counts;
    for (NoiseOp op : config.enabled_ops) counts[std::string(noise_op_name(op))] = 0;
    std::size_t words = 0, changed = 0;
    std::string result;
    // Whitespace is copied through untouched, so p = 0 reproduces the input.
    const std::u32string chars = stage("decoding " + in, [&] { return utf8::decode(text); });
    std::size_t i = 0;
    while (i < chars.size()) {
      if (utf8::is_space(chars[i])) {
        result += utf8::encode(chars[i]);
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < chars.size() && !utf8::is_space(chars[j])) ++j;
      const NoiseOutcome o = sample_noise(utf8::encode(chars.substr(i, j - i)), rng, config);
      ++words;
      if (o.op) {
        ++changed;
        ++counts[std::string(noise_op_name(*o.op))];
      }
      result += o.text;
      i = j;
    }
    stage("writing " + out, [&] { write_file(out, result); });
    nlohmann::ordered_json summary;
    summary["words"] = words;
    summary["changed"] = changed;
    summary["ops"] = counts;
    emit(report, summary.dump(1) + "\n");
  }
};

struct Stats {
  std::string vocab;
  std::string corpus;
  std::optional<std::string> out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("stats", "Word and subword sequence lengths, vocabulary coverage");
    cmd->add_option("--vocab", vocab, "Vocabulary file")->required();
    cmd->add_option("--corpus", corpus, "Text corpus, one sentence per line")->required();
    cmd->add_option("--out", out, "Output file (default: stdout)");
    cmd->callback([this] { run(); });
  }

  void run() {
    const Vocabulary v = stage("loading vocabulary " + vocab, [&] { return Vocabulary::load(vocab); });
    const std::vector<std::string> lines = read_lines(corpus);
    const SeqLengthStats s = seq_length_stats(lines, v);
    const Coverage c = coverage_report(lines, v);
    emit(out, s.to_text() + "words=" + std::to_string(c.words) + "\nin_vocab=" +
                  format_double(c.in_vocab) + "\nbackoff=" + format_double(c.backoff) + "\n");
  }
};

struct Embed {
  Data data;
  std::string checkpoint;
  std::string mode = "hybrid";
  std::string sentence;
  std::string in;
  std::optional<std::string> out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("embed", "Embed sentences in table_only, full or hybrid mode");
    data.add(cmd);
    cmd->add_option("--checkpoint", checkpoint, "Trained checkpoint (not needed for table_only)");
    cmd->add_option("--mode", mode, "table_only, full or hybrid")->capture_default_str();
    auto* s = cmd->add_option("--sentence", sentence, "A single sentence");
    auto* f = cmd->add_option("--in", in, "File with one sentence per line");
    s->excludes(f);
    cmd->add_option("--out", out, "Output file (default: stdout)");
    cmd->callback([this] { run(); });
  }

  void run() {
    const EmbedMode m = stage("embedding mode", [&] { return parse_embed_mode(mode); });
    const Vocabulary vocab = data.load_vocab();
    const EmbeddingTable table = data.load_table(vocab);
    std::optional<Char2Subword> model;
    if (m != EmbedMode::kTableOnly) {
      if (checkpoint.empty()) throw Error(mode + " mode needs --checkpoint");
      model = stage("loading checkpoint " + checkpoint, [&] { return load_checkpoint(checkpoint); });
    }
    std::vector<std::string> sentences;
    if (!in.empty()) {
      sentences = read_lines(in);
    } else {
      sentences.push_back(sentence);
    }
    std::string text;
    stage("embedding", [&] {
      for (const auto& s : sentences) {
        const EmbeddedSequence seq =
            embed_sequence(m, s, vocab, table, model ? &*model : nullptr);
        text += format_embeddings(seq, table.dim(), m);
      }
    });
    emit(out, text);
  }
};

struct Attn {
  std::string checkpoint;
  std::string input;
  bool full_word = false;
  std::optional<std::string> out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("attn", "Dump per-layer, per-head character attention maps");
    cmd->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
    cmd->add_option("input", input, "Token or word")->required();
    cmd->add_flag("--full-word", full_word, "Treat the input as a full word");
    cmd->add_option("--out", out, "Output file (default: stdout)");
    cmd->callback([this] { run(); });
  }

  void run() {
    const Char2Subword m =
        stage("loading checkpoint " + checkpoint, [&] { return load_checkpoint(checkpoint); });
    emit(out, stage("attention", [&] { return dump_attention(m, input, full_word); }));
  }
};

struct Params {
  ModelFlags model;
  std::string checkpoint;
  std::string vocab;
  std::string table;
  std::optional<std::size_t> alphabet_size;
  std::optional<std::size_t> d_out;
  std::optional<std::size_t> table_rows;
  std::optional<std::size_t> table_dim;
  bool breakdown = false;
  std::optional<std::string> out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("params", "Compare module and embedding-table parameter counts");
    model.add(cmd);
    cmd->add_option("--checkpoint", checkpoint, "Take the model shape from a checkpoint");
    cmd->add_option("--vocab", vocab, "Derive the alphabet and table rows from a vocabulary");
    cmd->add_option("--table", table, "Take the table shape from an embedding table");
    cmd->add_option("--alphabet-size", alphabet_size, "Character alphabet size, reserved symbols included");
    cmd->add_option("--d-out", d_out, "Output width d (default: table width)");
    cmd->add_option("--table-rows", table_rows, "Vocabulary size |V|");
    cmd->add_option("--table-dim", table_dim, "Table width d");
    cmd->add_flag("--breakdown", breakdown, "List every tensor and its shape");
    cmd->add_option("--out", out, "Output file (default: stdout)");
    cmd->callback([this] { run(); });
  }

  void run() {
    std::optional<Vocabulary> v;
    if (!vocab.empty()) v = stage("loading vocabulary " + vocab, [&] { return Vocabulary::load(vocab); });
    std::size_t rows = 0, dim = 0;
    if (!table.empty()) {
      const EmbeddingTable t = stage("loading table " + table, [&] { return EmbeddingTable::load(table); });
      rows = t.size();
      dim = t.dim();
    }
    if (v && rows == 0) rows = v->size();
    if (table_rows) rows = *table_rows;
    if (table_dim) dim = *table_dim;
    if (rows == 0 || dim == 0) throw Error("table shape unknown: give --table or --table-rows and --table-dim");

    ModelConfig config;
    std::size_t alpha = 0;
    if (!checkpoint.empty()) {
      const Char2Subword m =
          stage("loading checkpoint " + checkpoint, [&] { return load_checkpoint(checkpoint); });
      config = m.config();
      alpha = m.alphabet().size();
    } else {
      config = model.config(d_out.value_or(dim));
      if (alphabet_size) {
        alpha = *alphabet_size;
      } else if (v) {
        alpha = training_alphabet(*v, disabled_noise()).size();
      } else {
        throw Error("alphabet size unknown: give --checkpoint, --vocab or --alphabet-size");
      }
    }
    const std::size_t module = param_count(config, alpha);
    const std::size_t lookup = table_param_count(rows, dim);
    std::string text = "char2subword_params=" + std::to_string(module) + "\n";
    text += "table_params=" + std::to_string(lookup) + "\n";
    text += "ratio=" + format_double(static_cast<double>(module) / static_cast<double>(lookup)) + "\n";
    text += "reduction=" +
            format_double(1.0 - static_cast<double>(module) / static_cast<double>(lookup)) + "\n";
    if (breakdown) {
      Char2SubwordParams shapes = zero_params(config, alpha);
      for_each_tensor(shapes, [&](const std::string& name, const Matrix& m) {
        text += name + "\t" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "\n";
      });
    }
    emit(out, text);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"char2subword: a character-level stand-in for a subword embedding table", "c2sw"};
  app.set_config("--config", "", "Configuration file (TOML/INI); flags override its values");
  app.allow_config_extras(CLI::config_extras_mode::error);
  int config_version = kConfigVersion;
  app.add_option("--config-version", config_version, "Configuration schema version")
      ->capture_default_str();
  app.require_subcommand(1);

  Simulate simulate;
  Pretrain pretrain;
  Eval eval;
  Neighbors neighbors;
  Noise noise;
  Stats stats;
  Embed embed;
  Attn attn;
  Params params;
  simulate.add(app);
  pretrain.add(app);
  eval.add(app);
  neighbors.add(app);
  noise.add(app);
  stats.add(app);
  embed.add(app);
  attn.add(app);
  params.add(app);
  app.parse_complete_callback([&] {
    if (config_version != kConfigVersion) {
      throw CLI::ValidationError("--config-version", "unsupported configuration version " +
                                                         std::to_string(config_version) +
                                                         " (expected " +
                                                         std::to_string(kConfigVersion) + ")");
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const c2sw::NumericError& e) {
    std::cerr << "c2sw: numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const c2sw::Error& e) {
    std::cerr << "c2sw: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "c2sw: internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
