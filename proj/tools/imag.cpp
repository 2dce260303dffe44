// Command-line front end: derive-data, train, generate, evaluate, analyze.
// Exit codes: 0 ok, 1 I/O failure, 2 validation failure, 3 numeric failure.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imag/checkpoint.hpp"
#include "imag/dataset.hpp"
#include "imag/error.hpp"
#include "imag/evaluation.hpp"
#include "imag/log.hpp"
#include "imag/seq2seq.hpp"
#include "imag/training.hpp"

namespace fs = std::filesystem;
using namespace imag;

namespace {

void print_split_stats(const ItgSplit& split) {
  std::printf("%-10s %8s %14s %14s\n", "split", "pairs", "triples/pair", "words/target");
  auto row = [](const char* name, const SplitStats& st, bool with_text) {
    std::printf("%-10s %8d %14.3f ", name, st.pairs, st.avg_triples);
    if (with_text)
      std::printf("%14.2f\n", st.avg_target_len);
    else
      std::printf("%14s\n", "-");
  };
  row("train", split.train_stats, true);
  row("dev", split.dev_stats, false);
  row("test", split.test_stats, false);
}

int cmd_derive(const std::string& corpus, const std::string& out_dir, std::uint64_t seed,
               double dev_frac, double test_frac) {
  auto samples = load_corpus(corpus);
  SplitFractions fr;
  if (dev_frac >= 0.0) fr.dev = dev_frac;
  if (test_frac >= 0.0) fr.test = test_frac;
  ItgSplit split = derive_itg_split(samples, seed, fr);
  fs::create_directories(out_dir);
  write_corpus(out_dir + "/train.jsonl", split.train, true);
  write_corpus(out_dir + "/dev.jsonl", split.dev, false);
  write_corpus(out_dir + "/test.jsonl", split.test, false);
  write_corpus(out_dir + "/one_triple.jsonl", split.one_triple, true);
  write_split_manifest(out_dir + "/manifest.json", split);
  print_split_stats(split);
  std::printf("one-triple pool: %zu sentences\n", split.one_triple.size());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_ckpt, std::uint64_t seed, const std::string& variant,
              const std::string& model_kind) {
  TrainConfig cfg;
  if (!config_path.empty()) cfg = load_train_config(config_path);
  cfg.seed = seed;
  if (!variant.empty()) cfg.variant = parse_variant(variant);
  if (!model_kind.empty()) cfg.model_kind = parse_model_kind(model_kind);

  ItgSplit split;
  split.train = load_corpus(data_dir + "/train.jsonl");
  split.seed = seed;
  TrainResult result = train(cfg, split, out_ckpt);
  write_train_report(out_ckpt + ".report.json", result.report);
  const double final_loss =
      result.report.loss_curve.empty() ? 0.0 : result.report.loss_curve.back();
  std::printf("trained %zu batches in %.1fs, final loss %.4f, checkpoint %s\n",
              result.report.loss_curve.size(), result.report.wall_clock_seconds, final_loss,
              out_ckpt.c_str());
  return 0;
}

int cmd_generate(const std::string& ckpt, const std::string& input, const std::string& entity,
                 const std::string& out, const std::string& ablate, int max_len) {
  LoadedModel lm = load_model(ckpt);
  const AblateMode mode = parse_ablate_mode(ablate);
  std::vector<GenerationRecord> records;
  if (!entity.empty()) {
    records.push_back(
        generate_from_tokens(lm.model, lm.vocab, "entity", tokenize_entity(entity), max_len, mode));
  } else {
    for (const Sample& s : load_corpus(input))
      records.push_back(generate(lm.model, lm.vocab, s, max_len, mode));
  }
  write_generation_records(out, records);
  std::printf("wrote %zu generations to %s\n", records.size(), out.c_str());
  return 0;
}

std::vector<std::vector<std::string>> pseudo_targets_for(std::span<const Sample> inputs,
                                                         std::span<const Sample> pool) {
  std::vector<std::vector<std::string>> targets;
  targets.reserve(inputs.size());
  for (const Sample& s : inputs) {
    std::vector<std::string> entities;
    for (const Triple& t : s.triples.triples) {
      entities.push_back(t.head);
      entities.push_back(t.tail);
    }
    targets.push_back(build_pseudo_target(entities, pool));
  }
  return targets;
}

int cmd_evaluate(const std::string& gen_path, const std::string& input_path,
                 const std::string& pool_path, const std::string& out,
                 const std::string& label) {
  auto gens = read_generation_records(gen_path);
  auto inputs = load_corpus(input_path);
  auto pool = load_corpus(pool_path);
  if (gens.size() != inputs.size())
    throw ConfigError("evaluate: " + std::to_string(gens.size()) + " generations vs " +
                      std::to_string(inputs.size()) + " inputs (must align)");
  EvalReport rep = evaluate_corpus(gens, pseudo_targets_for(inputs, pool));
  write_eval_report(out, rep);
  std::fputs(format_eval_table(rep, label).c_str(), stdout);
  if (rep.empty_pseudo_targets > 0)
    std::printf("note: %d of %d pairs had empty pseudo-targets (excluded from ROUGE)\n",
                rep.empty_pseudo_targets, rep.pairs);
  return 0;
}

int cmd_analyze(const std::string& gen_path, const std::string& input_path,
                const std::string& pool_path, const std::string& train_path,
                const std::string& out, const std::string& label) {
  auto gens = read_generation_records(gen_path);
  auto inputs = load_corpus(input_path);
  auto pool = load_corpus(pool_path);
  auto train_split = load_corpus(train_path);
  AcquisitionReport rep = acquisition_analysis(gens, inputs, pool, train_split);
  write_acquisition_report(out, rep);
  std::fputs(format_acquisition_table(rep, label).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memory-augmented KB-to-text generation toolkit"};
  app.require_subcommand(1);

  std::string corpus, out_dir;
  std::uint64_t seed = 0;
  double dev_frac = -1.0, test_frac = -1.0;
  auto* derive = app.add_subcommand("derive-data", "derive train/dev/test splits from a corpus");
  derive->add_option("--corpus", corpus, "corpus JSONL")->required();
  derive->add_option("--out", out_dir, "output directory")->required();
  derive->add_option("--seed", seed, "shuffle seed")->required();
  derive->add_option("--dev-frac", dev_frac, "dev fraction of the corpus");
  derive->add_option("--test-frac", test_frac, "test fraction of the corpus");

  std::string config_path, data_dir, out_ckpt, variant, model_kind;
  auto* train_cmd = app.add_subcommand("train", "run the two-stage training loop");
  train_cmd->add_option("--config", config_path, "key=value config file");
  train_cmd->add_option("--data", data_dir, "split directory from derive-data")->required();
  train_cmd->add_option("--out", out_ckpt, "checkpoint path")->required();
  train_cmd->add_option("--seed", seed, "training seed")->required();
  train_cmd->add_option("--variant", variant, "penalty variant override");
  train_cmd->add_option("--model-kind", model_kind, "model kind override");

  std::string ckpt, input, entity, out_path, ablate = "none";
  int max_len = 60;
  auto* gen_cmd = app.add_subcommand("generate", "greedy generation from a checkpoint");
  gen_cmd->add_option("--ckpt", ckpt, "checkpoint path")->required();
  auto* input_opt = gen_cmd->add_option("--input", input, "input JSONL");
  gen_cmd->add_option("--entity", entity, "single entity name as input")->excludes(input_opt);
  gen_cmd->add_option("--out", out_path, "output JSONL")->required();
  gen_cmd->add_option("--ablate", ablate, "none | wo_memory | wo_source");
  gen_cmd->add_option("--max-len", max_len, "maximum output length");

  std::string gen_path, input_path, pool_path, train_path, label = "model";
  auto* eval_cmd = app.add_subcommand("evaluate", "score generations against pseudo-targets");
  eval_cmd->add_option("--generations", gen_path, "generations JSONL")->required();
  eval_cmd->add_option("--input", input_path, "input JSONL used for generation")->required();
  eval_cmd->add_option("--one-triple-corpus", pool_path, "held-out 1-triple JSONL")->required();
  eval_cmd->add_option("--out", out_path, "report path")->required();
  eval_cmd->add_option("--label", label, "row label for the printed table");

  auto* an_cmd = app.add_subcommand("analyze", "information acquisition analysis");
  an_cmd->add_option("--generations", gen_path, "generations JSONL")->required();
  an_cmd->add_option("--input", input_path, "input JSONL used for generation")->required();
  an_cmd->add_option("--one-triple-corpus", pool_path, "held-out 1-triple JSONL")->required();
  an_cmd->add_option("--train-split", train_path, "training split JSONL")->required();
  an_cmd->add_option("--out", out_path, "report path")->required();
  an_cmd->add_option("--label", label, "row label for the printed table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (derive->parsed()) return cmd_derive(corpus, out_dir, seed, dev_frac, test_frac);
    if (train_cmd->parsed())
      return cmd_train(config_path, data_dir, out_ckpt, seed, variant, model_kind);
    if (gen_cmd->parsed()) {
      if (entity.empty() && input.empty())
        throw ConfigError("generate: need --input or --entity");
      return cmd_generate(ckpt, input, entity, out_path, ablate, max_len);
    }
    if (eval_cmd->parsed())
      return cmd_evaluate(gen_path, input_path, pool_path, out_path, label);
    if (an_cmd->parsed())
      return cmd_analyze(gen_path, input_path, pool_path, train_path, out_path, label);
  } catch (const NumericError& e) {
    log_error(e.what());
    return 3;
  } catch (const IoError& e) {
    log_error(e.what());
    return 1;
  } catch (const Error& e) {
    log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    log_error(e.what());
    return 1;
  }
  return 0;
}
