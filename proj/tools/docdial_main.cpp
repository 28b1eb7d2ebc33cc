// docdial: synth / ingest / split / train / predict / eval / report for the
// grounded-dialogue toolkit. One command per process; all diagnostics go to
// stderr; outputs are byte-reproducible given identical seeds.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <zlib.h>

#include "docdial/checkpoint.hpp"
#include "docdial/corpus.hpp"
#include "docdial/decoder.hpp"
#include "docdial/metrics.hpp"
#include "docdial/tokenizer.hpp"
#include "docdial/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace docdial;

namespace {

// --------------------------------------------------------------------------
// Shared plumbing
// --------------------------------------------------------------------------

// Relative paths that do not exist are retried under $DOCDIAL_DATA_DIR.
std::string resolve_input(const std::string& path) {
  if (fs::exists(path)) return path;
  const char* base = std::getenv("DOCDIAL_DATA_DIR");
  if (base != nullptr && !fs::path(path).is_absolute()) {
    fs::path candidate = fs::path(base) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

std::string file_crc32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing";
  uLong crc = crc32(0L, Z_NULL, 0);
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(in.gcount()));
  }
  char hex[16];
  std::snprintf(hex, sizeof(hex), "%08lx", static_cast<unsigned long>(crc));
  return hex;
}

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::vector<std::string> g_argv;

// Written up front so a crashed run still leaves enough to reproduce it.
void write_manifest(const fs::path& out_dir, const std::string& command, const json& resolved,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  json in_list = json::array();
  for (const std::string& p : inputs) in_list.push_back({{"path", p}, {"crc32", file_crc32(p)}});
  json manifest{{"command", command}, {"argv", g_argv},       {"resolved", resolved},
                {"inputs", in_list},  {"outputs", outputs},   {"timestamp", iso_timestamp()}};
  std::ofstream out(out_dir / "run_manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in '" + out_dir.string() + "'");
  out << manifest.dump(2) << '\n';
}

struct CorpusArgs {
  std::string documents, dialogues;

  void attach(CLI::App* cmd) {
    cmd->add_option("--documents", documents, "documents .jsonl file")->required();
    cmd->add_option("--dialogues", dialogues, "dialogues .jsonl file")->required();
  }
  Corpus load() const {
    return load_corpus(resolve_input(documents), resolve_input(dialogues));
  }
  std::vector<std::string> paths() const {
    return {resolve_input(documents), resolve_input(dialogues)};
  }
};

// --------------------------------------------------------------------------
// synth / ingest / split
// --------------------------------------------------------------------------

struct SynthOpts {
  uint64_t seed = 7;
  int dialogues = 64;
  int docs = 8;
  int max_turns = 4;
  std::string out;
};

int cmd_synth(const SynthOpts& o) {
  fs::create_directories(o.out);
  const fs::path out_dir(o.out);
  write_manifest(out_dir, "synth",
                 json{{"seed", o.seed},
                      {"dialogues", o.dialogues},
                      {"docs", o.docs},
                      {"max_turns", o.max_turns}},
                 {}, {(out_dir / "documents.jsonl").string(), (out_dir / "dialogues.jsonl").string()});
  Corpus corpus = synth_corpus(o.seed, o.dialogues, o.docs, o.max_turns);
  write_corpus(corpus, (out_dir / "documents.jsonl").string(),
               (out_dir / "dialogues.jsonl").string());
  std::cerr << "synth: " << corpus.dialogues.size() << " dialogues, " << corpus.documents.size()
            << " documents, " << corpus.agent_turn_count() << " agent turns\n";
  return 0;
}

struct IngestOpts {
  CorpusArgs corpus;
  std::string out;
};

int cmd_ingest(const IngestOpts& o) {
  fs::create_directories(o.out);
  const fs::path out_dir(o.out);
  write_manifest(out_dir, "ingest", json::object(), o.corpus.paths(),
                 {(out_dir / "documents.jsonl").string(), (out_dir / "dialogues.jsonl").string()});
  Corpus corpus = o.corpus.load();
  write_corpus(corpus, (out_dir / "documents.jsonl").string(),
               (out_dir / "dialogues.jsonl").string());
  std::cerr << "ingest: validated " << corpus.dialogues.size() << " dialogues against "
            << corpus.documents.size() << " documents\n";
  return 0;
}

struct SplitOpts {
  CorpusArgs corpus;
  std::string fraction = "1";
  uint64_t seed = 1;
  std::string out;
};

int cmd_split(const SplitOpts& o) {
  const Fraction fraction = Fraction::parse(o.fraction);
  fs::create_directories(o.out);
  const fs::path out_dir(o.out);
  write_manifest(out_dir, "split",
                 json{{"fraction", fraction.str()}, {"seed", o.seed}}, o.corpus.paths(),
                 {(out_dir / "documents.jsonl").string(), (out_dir / "dialogues.jsonl").string()});
  Corpus corpus = o.corpus.load();
  Corpus split = lowres_split(corpus, fraction, o.seed);
  write_corpus(split, (out_dir / "documents.jsonl").string(),
               (out_dir / "dialogues.jsonl").string());
  std::cerr << "split: kept " << split.dialogues.size() << " of " << corpus.dialogues.size()
            << " dialogues (fraction " << fraction.str() << ")\n";
  return 0;
}

// --------------------------------------------------------------------------
// train
// --------------------------------------------------------------------------

struct TrainOpts {
  CorpusArgs corpus;
  std::string out;
  std::string profile = "desk";
  std::string tasks = "main+aux";
  std::string prompt_style = "connected";
  std::string lts = "on";
  double tau_start = 1.0;
  double tau_end = 0.7;
  int epochs = -1;  // resolved from --tasks when unset
  int batch_size = 8;
  double lr = -1;  // resolved from profile when unset
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;
  double dropout = 0.1;
  uint64_t seed = 1;
  uint64_t shuffle_seed = 1;
  int min_freq = 1;
  int max_input_len = -1;  // resolved from profile when unset
  int d_model = 128;
  int n_heads = 4;
  int enc_layers = 2;
  int dec_layers = 2;
  int d_ff = 256;
  std::string label = "run";
  std::string dump_instances;
};

int cmd_train(TrainOpts& o, bool tau_end_given) {
  const bool paper = o.profile == "paper";
  const bool enable_aux = o.tasks == "main+aux";
  const bool enable_lts = o.lts == "on";
  if (!enable_lts && tau_end_given) {
    std::cerr << "warning: --tau-end has no effect with --lts off; ignored\n";
  }
  // Paper-profile values; desk values tuned for a from-scratch toy model.
  if (o.epochs < 0) o.epochs = enable_aux ? 5 : 10;
  if (o.lr < 0) o.lr = paper ? 1e-4 : 3e-4;
  if (o.max_input_len < 0) o.max_input_len = paper ? 2560 : 512;

  fs::create_directories(o.out);
  const fs::path out_dir(o.out);

  Corpus corpus = o.corpus.load();
  Vocabulary vocab = build_vocab(corpus, o.min_freq);

  ModelConfig mcfg;
  mcfg.d_model = o.d_model;
  mcfg.n_heads = o.n_heads;
  mcfg.n_enc_layers = o.enc_layers;
  mcfg.n_dec_layers = o.dec_layers;
  mcfg.d_ff = o.d_ff;
  mcfg.vocab_size = vocab.size();
  mcfg.max_positions = std::max(o.max_input_len, 160);
  mcfg.dropout_rate = o.dropout;
  mcfg.init_seed = o.seed;
  mcfg.validate();

  TrainConfig tcfg;
  tcfg.epochs = o.epochs;
  tcfg.batch_size = o.batch_size;
  tcfg.weight_decay = o.weight_decay;
  tcfg.adam_beta1 = o.adam_beta1;
  tcfg.adam_beta2 = o.adam_beta2;
  tcfg.adam_eps = o.adam_eps;
  tcfg.grad_clip_norm = o.grad_clip;
  tcfg.schedule.tau_start = enable_lts ? o.tau_start : 1.0;
  tcfg.schedule.tau_end = enable_lts ? o.tau_end : 1.0;
  tcfg.schedule.base_lr = o.lr;
  tcfg.shuffle_seed = o.shuffle_seed;
  tcfg.label = o.label;
  tcfg.validate();

  const PromptStyle style = prompt_style_from_name(o.prompt_style);

  json resolved{{"profile", o.profile},
                {"tasks", o.tasks},
                {"prompt_style", o.prompt_style},
                {"lts", o.lts},
                {"tau_start", tcfg.schedule.tau_start},
                {"tau_end", tcfg.schedule.tau_end},
                {"epochs", o.epochs},
                {"batch_size", o.batch_size},
                {"lr", o.lr},
                {"weight_decay", o.weight_decay},
                {"adam_beta1", o.adam_beta1},
                {"adam_beta2", o.adam_beta2},
                {"adam_eps", o.adam_eps},
                {"grad_clip", o.grad_clip},
                {"dropout", o.dropout},
                {"seed", o.seed},
                {"shuffle_seed", o.shuffle_seed},
                {"min_freq", o.min_freq},
                {"max_input_len", o.max_input_len},
                {"d_model", o.d_model},
                {"n_heads", o.n_heads},
                {"enc_layers", o.enc_layers},
                {"dec_layers", o.dec_layers},
                {"d_ff", o.d_ff},
                {"vocab_size", vocab.size()},
                {"label", o.label}};
  write_manifest(out_dir, "train", resolved, o.corpus.paths(),
                 {(out_dir / "checkpoint.ckpt").string(), (out_dir / "trainlog.jsonl").string()});

  if (!o.dump_instances.empty()) {
    std::ofstream dump(o.dump_instances, std::ios::binary);
    if (!dump) throw std::runtime_error("cannot write '" + o.dump_instances + "'");
    for (const TaskInstance& inst :
         build_training_set(corpus, style, enable_aux, vocab, o.max_input_len)) {
      dump << json{{"kind", task_kind_name(inst.kind)},
                   {"input_text", decode(vocab, inst.input_ids)},
                   {"target_text", decode(vocab, inst.target_ids)},
                   {"dial_id", inst.dial_id},
                   {"turn_index", inst.turn_index}}
                  .dump()
           << '\n';
    }
  }

  TrainResult result =
      train(corpus, mcfg, tcfg, style, enable_aux, enable_lts, vocab, o.max_input_len);

  const double inference_tau = enable_lts ? tcfg.schedule.tau_end : 1.0;
  save_checkpoint((out_dir / "checkpoint.ckpt").string(), mcfg, vocab, result.params,
                  inference_tau, o.max_input_len, o.prompt_style);

  std::ofstream log(out_dir / "trainlog.jsonl", std::ios::binary);
  if (!log) throw std::runtime_error("cannot write trainlog");
  for (const TrainLogRow& row : result.log) {
    log << json{{"step", row.step},
                {"epoch", row.epoch},
                {"loss", row.loss},
                {"tau", row.tau},
                {"lr", row.lr}}
               .dump()
        << '\n';
  }

  std::cerr << "train: " << result.n_instances << " instances, "
            << result.schedule.total_steps << " steps; final loss "
            << (result.log.empty() ? 0.0 : result.log.back().loss) << "\n";
  return 0;
}

// --------------------------------------------------------------------------
// predict / eval
// --------------------------------------------------------------------------

struct DecodeOpts {
  std::string checkpoint;
  int beam_size = 2;
  int max_output_len = 96;
  double length_penalty = 0.0;
  double inference_tau = -1;  // < 0: use the checkpoint's training tau_end

  void attach(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    cmd->add_option("--beam-size", beam_size, "beam size");
    cmd->add_option("--max-output-len", max_output_len, "maximum generated length");
    cmd->add_option("--length-penalty", length_penalty, "length penalty exponent");
    cmd->add_option("--inference-tau", inference_tau,
                    "decode temperature (default: the checkpoint's training tau_end)");
  }
};

std::vector<PredictionRecord> run_predictions(const Checkpoint& ckpt, const Corpus& corpus,
                                              const DecodeOpts& d) {
  BeamConfig beam;
  beam.beam_size = d.beam_size;
  beam.max_output_len = std::min(d.max_output_len, ckpt.config.max_positions - 1);
  beam.length_penalty = d.length_penalty;
  beam.inference_tau = d.inference_tau > 0 ? d.inference_tau : ckpt.inference_tau;
  beam.validate();
  const PromptStyle style = prompt_style_from_name(ckpt.prompt_style);

  std::vector<PredictionRecord> records;
  for (const Dialogue& dial : corpus.dialogues) {
    const Document& doc = corpus.document_for(dial);
    for (int i = 0; i < static_cast<int>(dial.turns.size()); ++i) {
      if (dial.turns[i].role != Role::Agent) continue;
      Prediction pred = predict(ckpt.params, ckpt.config, dial, i, doc, ckpt.vocab, beam, style,
                                ckpt.max_input_len);
      PredictionRecord rec;
      rec.dial_id = dial.dial_id;
      rec.turn_index = i;
      rec.grounding_pred = pred.output.grounding_text;
      rec.response_pred = pred.output.response_text;
      if (pred.error != OutputParseError::None) {
        rec.parse_error = output_parse_error_name(pred.error);
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

struct PredictOpts {
  CorpusArgs corpus;
  DecodeOpts decode;
  std::string out;
};

int cmd_predict(const PredictOpts& o) {
  const fs::path out_path(o.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  Checkpoint ckpt = load_checkpoint(resolve_input(o.decode.checkpoint));
  Corpus corpus = o.corpus.load();
  std::vector<PredictionRecord> records = run_predictions(ckpt, corpus, o.decode);
  write_predictions(records, o.out);
  std::cerr << "predict: wrote " << records.size() << " predictions\n";
  return 0;
}

struct EvalOpts {
  CorpusArgs corpus;
  DecodeOpts decode;
  std::string out;
  std::string label = "run";
  std::string fraction = "1";
};

int cmd_eval(const EvalOpts& o) {
  const Fraction fraction = Fraction::parse(o.fraction);
  fs::create_directories(o.out);
  const fs::path out_dir(o.out);
  auto inputs = o.corpus.paths();
  inputs.push_back(resolve_input(o.decode.checkpoint));
  write_manifest(out_dir, "eval",
                 json{{"label", o.label},
                      {"fraction", fraction.str()},
                      {"beam_size", o.decode.beam_size},
                      {"max_output_len", o.decode.max_output_len},
                      {"length_penalty", o.decode.length_penalty}},
                 inputs,
                 {(out_dir / "predictions.jsonl").string(), (out_dir / "report.json").string(),
                  (out_dir / "report.tsv").string()});

  Checkpoint ckpt = load_checkpoint(resolve_input(o.decode.checkpoint));
  Corpus corpus = o.corpus.load();
  std::vector<PredictionRecord> records = run_predictions(ckpt, corpus, o.decode);
  write_predictions(records, (out_dir / "predictions.jsonl").string());

  EvalReport report = evaluate(records, corpus);
  report.checkpoint_id = ckpt.blob_crc32;
  report.label = o.label;
  report.fraction = fraction.str();
  report.flags = "beam_size=" + std::to_string(o.decode.beam_size) +
                 ",inference_tau=" + std::to_string(o.decode.inference_tau > 0
                                                        ? o.decode.inference_tau
                                                        : ckpt.inference_tau);
  write_report_json(report, (out_dir / "report.json").string());
  write_report_tsv(report, (out_dir / "report.tsv").string());

  std::cout << kReportTsvHeader << '\n' << report_tsv_row(report) << '\n';
  return 0;
}

// --------------------------------------------------------------------------
// report
// --------------------------------------------------------------------------

struct ReportOpts {
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_report(const ReportOpts& o) {
  struct Row {
    std::string label;
    Fraction fraction;
    std::string rest;
    size_t order;  // later rows win on duplicate (label, fraction)
  };
  std::vector<Row> rows;
  size_t order = 0;
  for (const std::string& path : o.inputs) {
    std::ifstream in(resolve_input(path));
    if (!in) throw ParseError("cannot open report '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line == kReportTsvHeader) continue;
      const size_t t1 = line.find('\t');
      const size_t t2 = line.find('\t', t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos) {
        throw ParseError("report row without label/fraction columns: '" + line + "'");
      }
      Row row;
      row.label = line.substr(0, t1);
      row.fraction = Fraction::parse(line.substr(t1 + 1, t2 - t1 - 1));
      row.rest = line.substr(t2 + 1);
      row.order = order++;
      rows.push_back(std::move(row));
    }
  }

  std::map<std::pair<std::string, double>, Row> merged;
  for (Row& row : rows) {
    const auto key = std::make_pair(row.label, row.fraction.value());
    auto it = merged.find(key);
    if (it != merged.end()) {
      std::cerr << "warning: duplicate row for label '" << row.label << "' fraction "
                << row.fraction.str() << "; keeping the latest\n";
      if (row.order > it->second.order) it->second = std::move(row);
    } else {
      merged.emplace(key, std::move(row));
    }
  }

  const fs::path out_path(o.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + o.out + "'");
  out << kReportTsvHeader << '\n';
  for (const auto& [key, row] : merged) {
    out << row.label << '\t' << row.fraction.str() << '\t' << row.rest << '\n';
  }
  std::cerr << "report: merged " << merged.size() << " rows\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) g_argv.emplace_back(argv[i]);

  CLI::App app{"grounded-dialogue training and evaluation toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from a TOML/INI config file");

  SynthOpts synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a deterministic toy corpus");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed");
  synth_cmd->add_option("--dialogues", synth.dialogues, "number of dialogues");
  synth_cmd->add_option("--docs", synth.docs, "number of documents");
  synth_cmd->add_option("--max-turns", synth.max_turns, "maximum turns per dialogue");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();

  IngestOpts ingest;
  CLI::App* ingest_cmd = app.add_subcommand("ingest", "validate and canonicalize a corpus");
  ingest.corpus.attach(ingest_cmd);
  ingest_cmd->add_option("--out", ingest.out, "output directory")->required();

  SplitOpts split;
  CLI::App* split_cmd = app.add_subcommand("split", "take a low-resource fraction");
  split.corpus.attach(split_cmd);
  split_cmd->add_option("--fraction", split.fraction, "1/32, 1/16, 1/8, 1/4 or 1")->required();
  split_cmd->add_option("--seed", split.seed, "shuffle seed");
  split_cmd->add_option("--out", split.out, "output directory")->required();

  TrainOpts train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_opts.corpus.attach(train_cmd);
  train_cmd->add_option("--out", train_opts.out, "output directory")->required();
  train_cmd->add_option("--profile", train_opts.profile, "desk or paper defaults")
      ->check(CLI::IsMember({"desk", "paper"}));
  train_cmd->add_option("--tasks", train_opts.tasks, "main or main+aux")
      ->check(CLI::IsMember({"main", "main+aux"}));
  train_cmd->add_option("--prompt-style", train_opts.prompt_style, "connected or independent")
      ->check(CLI::IsMember({"connected", "independent"}));
  train_cmd->add_option("--lts", train_opts.lts, "linear temperature scheduling on/off")
      ->check(CLI::IsMember({"on", "off"}));
  train_cmd->add_option("--tau-start", train_opts.tau_start, "starting temperature");
  CLI::Option* tau_end_opt =
      train_cmd->add_option("--tau-end", train_opts.tau_end, "ending temperature")
          ->check(CLI::IsMember({0.5, 0.6, 0.7, 0.8, 0.9}));
  train_cmd->add_option("--epochs", train_opts.epochs,
                        "training epochs (default 5 for main+aux, 10 for main)");
  train_cmd->add_option("--batch-size", train_opts.batch_size, "batch size");
  train_cmd->add_option("--lr", train_opts.lr, "initial learning rate");
  train_cmd->add_option("--weight-decay", train_opts.weight_decay, "decoupled weight decay");
  train_cmd->add_option("--adam-beta1", train_opts.adam_beta1, "Adam beta1");
  train_cmd->add_option("--adam-beta2", train_opts.adam_beta2, "Adam beta2");
  train_cmd->add_option("--adam-eps", train_opts.adam_eps, "Adam epsilon");
  train_cmd->add_option("--grad-clip", train_opts.grad_clip, "global gradient-norm clip");
  train_cmd->add_option("--dropout", train_opts.dropout, "dropout rate");
  train_cmd->add_option("--seed", train_opts.seed, "parameter init seed");
  train_cmd->add_option("--shuffle-seed", train_opts.shuffle_seed, "epoch shuffle seed");
  train_cmd->add_option("--min-freq", train_opts.min_freq, "vocabulary frequency cutoff");
  train_cmd->add_option("--max-input-len", train_opts.max_input_len,
                        "input truncation length (desk 512, paper 2560)");
  train_cmd->add_option("--d-model", train_opts.d_model, "model width");
  train_cmd->add_option("--n-heads", train_opts.n_heads, "attention heads");
  train_cmd->add_option("--enc-layers", train_opts.enc_layers, "encoder layers");
  train_cmd->add_option("--dec-layers", train_opts.dec_layers, "decoder layers");
  train_cmd->add_option("--d-ff", train_opts.d_ff, "feed-forward width");
  train_cmd->add_option("--label", train_opts.label, "run label");
  train_cmd->add_option("--dump-instances", train_opts.dump_instances,
                        "also dump serialized task instances to this file");

  PredictOpts predict_opts;
  CLI::App* predict_cmd = app.add_subcommand("predict", "decode predictions for every agent turn");
  predict_opts.corpus.attach(predict_cmd);
  predict_opts.decode.attach(predict_cmd);
  predict_cmd->add_option("--out", predict_opts.out, "predictions .jsonl path")->required();

  EvalOpts eval_opts;
  CLI::App* eval_cmd = app.add_subcommand("eval", "predict and score EM/F1/BLEU");
  eval_opts.corpus.attach(eval_cmd);
  eval_opts.decode.attach(eval_cmd);
  eval_cmd->add_option("--out", eval_opts.out, "output directory")->required();
  eval_cmd->add_option("--label", eval_opts.label, "row label for the report");
  eval_cmd->add_option("--fraction", eval_opts.fraction, "training fraction for the report row");

  ReportOpts report_opts;
  CLI::App* report_cmd = app.add_subcommand("report", "merge eval TSV rows into one table");
  report_cmd->add_option("inputs", report_opts.inputs, "eval report.tsv files")->expected(-1);
  report_cmd->add_option("--out", report_opts.out, "merged TSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (ingest_cmd->parsed()) return cmd_ingest(ingest);
    if (split_cmd->parsed()) return cmd_split(split);
    if (train_cmd->parsed()) return cmd_train(train_opts, tau_end_opt->count() > 0);
    if (predict_cmd->parsed()) return cmd_predict(predict_opts);
    if (eval_cmd->parsed()) return cmd_eval(eval_opts);
    if (report_cmd->parsed()) return cmd_report(report_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
