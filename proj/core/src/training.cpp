#include "imag/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "imag/checkpoint.hpp"
#include "imag/error.hpp"
#include "imag/log.hpp"

namespace imag {

void TrainConfig::validate() const {
  if (e < 1 || k < 1 || l < 1) throw ConfigError("config: e, k, l must be >= 1");
  if (zeta <= 0.0 || zeta > 1.0) throw ConfigError("config: zeta must be in (0, 1]");
  if (alpha < 0.0) throw ConfigError("config: alpha must be >= 0");
  if (gamma < 0.0) throw ConfigError("config: gamma must be >= 0");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (stage1_batches < 0 || stage2_batches < 0)
    throw ConfigError("config: batch budgets must be >= 0");
  if (learning_rate <= 0.0) throw ConfigError("config: learning_rate must be > 0");
  if (grad_clip <= 0.0) throw ConfigError("config: grad_clip must be > 0");
}

void set_config_field(TrainConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "e") cfg.e = std::stoi(value);
    else if (key == "k") cfg.k = std::stoi(value);
    else if (key == "l") cfg.l = std::stoi(value);
    else if (key == "zeta") cfg.zeta = std::stod(value);
    else if (key == "alpha") cfg.alpha = std::stod(value);
    else if (key == "gamma") cfg.gamma = std::stod(value);
    else if (key == "variant") cfg.variant = parse_variant(value);
    else if (key == "batch_size") cfg.batch_size = std::stoi(value);
    else if (key == "stage1_batches") cfg.stage1_batches = std::stoi(value);
    else if (key == "stage2_batches") cfg.stage2_batches = std::stoi(value);
    else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
    else if (key == "grad_clip") cfg.grad_clip = std::stod(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "model_kind") cfg.model_kind = parse_model_kind(value);
    else throw ConfigError("config: unknown key \"" + key + "\"");
  } catch (const std::invalid_argument&) {
    throw ConfigError("config: bad value \"" + value + "\" for key \"" + key + "\"");
  } catch (const std::out_of_range&) {
    throw ConfigError("config: value \"" + value + "\" out of range for key \"" + key + "\"");
  }
}

TrainConfig parse_train_config(std::istream& in) {
  TrainConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // trim
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto pe = line.find_last_not_of(" \t");
    line = line.substr(b, pe - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    auto strip = [](std::string s) {
      const auto sb = s.find_first_not_of(" \t");
      if (sb == std::string::npos) return std::string();
      const auto se = s.find_last_not_of(" \t");
      return s.substr(sb, se - sb + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    set_config_field(cfg, key, value);
  }
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  return parse_train_config(in);
}

std::vector<EncodedPair> make_batch(std::span<const Sample> samples, const Vocabulary& vocab,
                                    int window, double zeta, ModelKind kind,
                                    std::mt19937_64& rng) {
  if (samples.empty()) throw ConfigError("make_batch: empty sample list");
  std::vector<EncodedPair> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    EncodedPair pair;
    const TripleSet used =
        kind == ModelKind::kS2sf ? s.triples : drop_triples(s.triples, zeta, rng);
    pair.source = vocab.encode(flatten_triples(used));
    pad_to_min_length(pair.source, window, Vocabulary::kPad);
    pair.target = vocab.encode(s.text);
    pair.target.push_back(Vocabulary::kEos);
    out.push_back(std::move(pair));
  }
  return out;
}

Tensor stage1_loss(Tape& tape, const Model& m, const EncodedPair& pair) {
  EncoderRun enc = encode(tape, m, pair.source);
  DecodeOptions opt;
  opt.mode = DecodeMode::kTeacherForced;
  opt.gold = &pair.target;
  return decode(tape, m, enc, opt).loss;
}

Tensor stage2_loss(Tape& tape, const Model& m, const EncodedPair& pair, const PenaltyConfig& pc,
                   std::mt19937_64& rng) {
  EncoderRun enc = encode(tape, m, pair.source);
  DecodeOptions opt;
  opt.mode = DecodeMode::kGreedy;
  opt.gold = &pair.target;
  opt.align_to_gold = true;
  DecoderRun run = decode(tape, m, enc, opt);
  Tensor loss = run.loss;

  Tensor penalty;
  bool have_penalty = true;
  switch (pc.variant) {
    case PenaltyVariant::kNone:
      have_penalty = false;
      break;
    case PenaltyVariant::kRsp: {
      const LrnsSpan span = find_lrns(run.tokens);
      if (!span.found()) { have_penalty = false; break; }
      penalty = rsp_loss(tape, run, span);
      break;
    }
    case PenaltyVariant::kRwp:
      penalty = rwp_loss(tape, run, pc.gamma);
      break;
    case PenaltyVariant::kCvg:
      penalty = cvg_loss(tape, run);
      break;
    case PenaltyVariant::kRl: {
      DecodeOptions ropt;
      ropt.mode = DecodeMode::kSampled;
      ropt.rng = &rng;
      ropt.max_len = std::max<int>(8, 2 * static_cast<int>(pair.target.size()));
      penalty = rl_surrogate(tape, decode(tape, m, enc, ropt));
      break;
    }
  }
  if (have_penalty) loss = tape.add(loss, tape.scale_shift(penalty, pc.alpha, 0.0));
  return loss;
}

void zero_param_grads(const Model& m) {
  for (const NamedParam& p : m.params()) p.tensor.zero_grad();
}

double sgd_step(const Model& m, double learning_rate, double grad_clip) {
  const auto params = m.params();
  double sq = 0.0;
  for (const NamedParam& p : params)
    for (double g : *p.tensor.grad) sq += g * g;
  const double norm = std::sqrt(sq);
  const double scale = norm > grad_clip ? grad_clip / norm : 1.0;
  for (const NamedParam& p : params) {
    const int n = p.tensor.size();
    for (int i = 0; i < n; ++i) {
      (*p.tensor.values)[i] -= learning_rate * scale * (*p.tensor.grad)[i];
      (*p.tensor.grad)[i] = 0.0;
    }
  }
  return norm;
}

void write_train_report(const std::string& path, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write train report " + path);
  nlohmann::ordered_json j;
  j["loss_curve"] = report.loss_curve;
  j["stage_boundary_index"] = report.stage_boundary_index;
  j["wall_clock_seconds"] = report.wall_clock_seconds;
  j["checkpoint_path"] = report.checkpoint_path;
  out << j.dump(2) << "\n";
}

namespace {

// Epoch-shuffled cursor over the training set.
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::mt19937_64& rng) : order_(n), rng_(rng) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }
  std::size_t next() {
    if (cursor_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      cursor_ = 0;
    }
    return order_[cursor_++];
  }

 private:
  std::vector<std::size_t> order_;
  std::mt19937_64& rng_;
  std::size_t cursor_ = 0;
};

}  // namespace

TrainResult train(const TrainConfig& cfg, const ItgSplit& split,
                  const std::string& checkpoint_path, const StepObserver& observer) {
  cfg.validate();
  if (split.train.empty()) throw ConfigError("train: empty training split");
  for (const Sample& s : split.train)
    if (s.text.empty()) throw ConfigError("train: sample " + s.id + " has no target text");

  const auto t0 = std::chrono::steady_clock::now();
  Vocabulary vocab = build_vocab(split.train, 1);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.e = cfg.e;
  mc.k = cfg.k;
  mc.l = cfg.l;
  mc.kind = cfg.model_kind;
  TrainResult result{Model::init(mc, cfg.seed), std::move(vocab), {}};
  Model& model = result.model;

  std::mt19937_64 rng(cfg.seed);
  EpochSampler sampler(split.train.size(), rng);
  PenaltyConfig pc{cfg.variant, cfg.alpha, cfg.gamma};
  const int total = cfg.stage1_batches + cfg.stage2_batches;
  result.report.stage_boundary_index = cfg.stage1_batches;
  result.report.loss_curve.reserve(total);

  zero_param_grads(model);
  for (int batch = 0; batch < total; ++batch) {
    const bool stage2 = batch >= cfg.stage1_batches;
    std::vector<Sample> drawn;
    drawn.reserve(cfg.batch_size);
    for (int i = 0; i < cfg.batch_size; ++i) drawn.push_back(split.train[sampler.next()]);
    const auto pairs =
        make_batch(drawn, result.vocab, cfg.k, cfg.zeta, cfg.model_kind, rng);

    double batch_loss = 0.0;
    for (const EncodedPair& pair : pairs) {
      Tape tape;
      Tensor loss = stage2 ? stage2_loss(tape, model, pair, pc, rng)
                           : stage1_loss(tape, model, pair);
      batch_loss += loss.item();
      // Mean over the batch: scale each sample's contribution before backward.
      tape.backward(tape.scale_shift(loss, 1.0 / cfg.batch_size, 0.0));
    }
    batch_loss /= cfg.batch_size;
    if (!std::isfinite(batch_loss))
      throw NumericError("non-finite loss at batch " + std::to_string(batch + 1) + " (stage " +
                         (stage2 ? "2" : "1") + ")");
    result.report.loss_curve.push_back(batch_loss);
    sgd_step(model, cfg.learning_rate, cfg.grad_clip);
    if (observer) observer(batch + 1, model);
    if ((batch + 1) % 200 == 0)
      log_info("batch " + std::to_string(batch + 1) + "/" + std::to_string(total) + " loss " +
               std::to_string(batch_loss));
  }

  const auto t1 = std::chrono::steady_clock::now();
  result.report.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();
  if (!checkpoint_path.empty()) {
    save_model(model, result.vocab, checkpoint_path);
    result.report.checkpoint_path = checkpoint_path;
  }
  return result;
}

}  // namespace imag
