#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "imag/checkpoint.hpp"
#include "imag/error.hpp"
#include "imag/repetition.hpp"
#include "imag/seq2seq.hpp"
#include "imag/training.hpp"
#include "support/toy.hpp"

using namespace imag;
using imag::test::overfit_corpus;
using imag::test::repetition_corpus;
using imag::test::scratch_dir;
using imag::test::split_of;

namespace {

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_same_params(const Model& a, const Model& b) {
  const auto pa = a.params();
  const auto pb = b.params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i].name == pb[i].name);
    REQUIRE(pa[i].tensor.rows == pb[i].tensor.rows);
    REQUIRE(pa[i].tensor.cols == pb[i].tensor.cols);
    CHECK(*pa[i].tensor.values == *pb[i].tensor.values);
  }
}

double mean_range(const std::vector<double>& v, std::size_t first, std::size_t last) {
  REQUIRE(first < last);
  REQUIRE(last <= v.size());
  const auto b = v.begin() + static_cast<std::ptrdiff_t>(first);
  const auto e = v.begin() + static_cast<std::ptrdiff_t>(last);
  return std::accumulate(b, e, 0.0) / static_cast<double>(last - first);
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.e = 8;
  cfg.k = 3;
  cfg.l = 4;
  return cfg;
}

}  // namespace

TEST_CASE("train config defaults pass validation") {
  TrainConfig cfg;
  CHECK(cfg.e == 32);
  CHECK(cfg.k == 3);
  CHECK(cfg.l == 16);
  CHECK(cfg.zeta == 0.5);
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.gamma == 1.0);
  CHECK(cfg.variant == PenaltyVariant::kNone);
  CHECK(cfg.batch_size == 8);
  CHECK(cfg.stage1_batches == 200);
  CHECK(cfg.stage2_batches == 0);
  CHECK(cfg.learning_rate == 0.1);
  CHECK(cfg.grad_clip == 5.0);
  CHECK(cfg.seed == 1);
  CHECK(cfg.model_kind == ModelKind::kFull);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("train config validation rejects out-of-range fields") {
  auto broken = [](auto mutate) {
    TrainConfig cfg;
    mutate(cfg);
    return cfg;
  };
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.e = 0; }).validate(),
                       "config: e, k, l must be >= 1", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.k = 0; }).validate(),
                       "config: e, k, l must be >= 1", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.l = -2; }).validate(),
                       "config: e, k, l must be >= 1", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.zeta = 0.0; }).validate(),
                       "config: zeta must be in (0, 1]", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.zeta = 1.5; }).validate(),
                       "config: zeta must be in (0, 1]", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.alpha = -0.1; }).validate(),
                       "config: alpha must be >= 0", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.gamma = -1.0; }).validate(),
                       "config: gamma must be >= 0", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.batch_size = 0; }).validate(),
                       "config: batch_size must be >= 1", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.stage1_batches = -1; }).validate(),
                       "config: batch budgets must be >= 0", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.stage2_batches = -1; }).validate(),
                       "config: batch budgets must be >= 0", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.learning_rate = 0.0; }).validate(),
                       "config: learning_rate must be > 0", ConfigError);
  CHECK_THROWS_WITH_AS(broken([](TrainConfig& c) { c.grad_clip = 0.0; }).validate(),
                       "config: grad_clip must be > 0", ConfigError);
}

TEST_CASE("set_config_field covers every key") {
  TrainConfig cfg;
  set_config_field(cfg, "e", "4");
  set_config_field(cfg, "k", "2");
  set_config_field(cfg, "l", "7");
  set_config_field(cfg, "zeta", "0.25");
  set_config_field(cfg, "alpha", "1.5");
  set_config_field(cfg, "gamma", "0.75");
  set_config_field(cfg, "variant", "rwp");
  set_config_field(cfg, "batch_size", "3");
  set_config_field(cfg, "stage1_batches", "11");
  set_config_field(cfg, "stage2_batches", "5");
  set_config_field(cfg, "learning_rate", "0.01");
  set_config_field(cfg, "grad_clip", "2.5");
  set_config_field(cfg, "seed", "42");
  set_config_field(cfg, "model_kind", "s2s");
  CHECK(cfg.e == 4);
  CHECK(cfg.k == 2);
  CHECK(cfg.l == 7);
  CHECK(cfg.zeta == 0.25);
  CHECK(cfg.alpha == 1.5);
  CHECK(cfg.gamma == 0.75);
  CHECK(cfg.variant == PenaltyVariant::kRwp);
  CHECK(cfg.batch_size == 3);
  CHECK(cfg.stage1_batches == 11);
  CHECK(cfg.stage2_batches == 5);
  CHECK(cfg.learning_rate == 0.01);
  CHECK(cfg.grad_clip == 2.5);
  CHECK(cfg.seed == 42);
  CHECK(cfg.model_kind == ModelKind::kS2s);

  CHECK_THROWS_WITH_AS(set_config_field(cfg, "momentum", "0.9"),
                       "config: unknown key \"momentum\"", ConfigError);
  CHECK_THROWS_WITH_AS(set_config_field(cfg, "e", "abc"),
                       "config: bad value \"abc\" for key \"e\"", ConfigError);
  CHECK_THROWS_WITH_AS(set_config_field(cfg, "seed", "99999999999999999999999999"),
                       doctest::Contains("out of range"), ConfigError);
  CHECK_THROWS_AS(set_config_field(cfg, "variant", "bogus"), ConfigError);
  CHECK_THROWS_AS(set_config_field(cfg, "model_kind", "bogus"), ConfigError);
}

TEST_CASE("parse_train_config reads key=value lines") {
  std::istringstream in(
      "# run settings\n"
      "e = 8\n"
      "\tk=3\n"
      "l = 4   # inline comment\n"
      "zeta=0.75\n"
      "alpha = 0.25\n"
      "gamma=2\n"
      "variant = rsp\n"
      "batch_size = 2\n"
      "\n"
      "stage1_batches=7\n"
      "stage2_batches = 3\n"
      "learning_rate = 0.05\n"
      "grad_clip=1.5\n"
      "seed = 9\n"
      "model_kind = s2sf\n");
  const TrainConfig cfg = parse_train_config(in);
  CHECK(cfg.e == 8);
  CHECK(cfg.k == 3);
  CHECK(cfg.l == 4);
  CHECK(cfg.zeta == 0.75);
  CHECK(cfg.alpha == 0.25);
  CHECK(cfg.gamma == 2.0);
  CHECK(cfg.variant == PenaltyVariant::kRsp);
  CHECK(cfg.batch_size == 2);
  CHECK(cfg.stage1_batches == 7);
  CHECK(cfg.stage2_batches == 3);
  CHECK(cfg.learning_rate == 0.05);
  CHECK(cfg.grad_clip == 1.5);
  CHECK(cfg.seed == 9);
  CHECK(cfg.model_kind == ModelKind::kS2sf);

  std::istringstream dup("e=4\ne=9\n");
  CHECK(parse_train_config(dup).e == 9);  // later lines win

  std::istringstream no_eq("# header\nno equals sign here\n");
  CHECK_THROWS_WITH_AS(parse_train_config(no_eq), "config line 2: expected key=value",
                       ConfigError);
  std::istringstream no_key(" = 5\n");
  CHECK_THROWS_WITH_AS(parse_train_config(no_key), "config line 1: empty key or value",
                       ConfigError);
  std::istringstream no_value("e =\n");
  CHECK_THROWS_WITH_AS(parse_train_config(no_value), "config line 1: empty key or value",
                       ConfigError);
  std::istringstream unknown("e=4\nwidth=2\n");
  CHECK_THROWS_WITH_AS(parse_train_config(unknown), "config: unknown key \"width\"", ConfigError);
}

TEST_CASE("load_train_config reads a file") {
  const std::string dir = scratch_dir("cfg");
  const std::string path = dir + "/train.cfg";
  {
    std::ofstream out(path);
    out << "e=6\nseed=77\nvariant=cvg\n";
  }
  const TrainConfig cfg = load_train_config(path);
  CHECK(cfg.e == 6);
  CHECK(cfg.seed == 77);
  CHECK(cfg.variant == PenaltyVariant::kCvg);
  CHECK(cfg.k == 3);  // untouched keys keep defaults

  CHECK_THROWS_WITH_AS(load_train_config(dir + "/absent.cfg"),
                       doctest::Contains("cannot read config"), IoError);
}

TEST_CASE("make_batch encodes sources and targets") {
  const std::vector<Sample> corpus = overfit_corpus();
  const Vocabulary vocab = build_vocab(corpus, 1);
  const std::vector<Sample> four(corpus.begin(), corpus.begin() + 4);

  SUBCASE("s2sf keeps every triple") {
    std::mt19937_64 rng(1);
    const auto pairs = make_batch(four, vocab, 3, 0.5, ModelKind::kS2sf, rng);
    REQUIRE(pairs.size() == 4);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      CHECK(pairs[i].source == vocab.encode(flatten_triples(four[i].triples)));
      std::vector<int> want = vocab.encode(four[i].text);
      want.push_back(Vocabulary::kEos);
      CHECK(pairs[i].target == want);
    }
  }

  SUBCASE("zeta=1 keeps every triple for the full model") {
    std::mt19937_64 rng_a(2);
    std::mt19937_64 rng_b(99);
    const auto full = make_batch(four, vocab, 3, 1.0, ModelKind::kFull, rng_a);
    const auto keep = make_batch(four, vocab, 3, 1.0, ModelKind::kS2sf, rng_b);
    REQUIRE(full.size() == keep.size());
    for (std::size_t i = 0; i < full.size(); ++i) {
      CHECK(full[i].source == keep[i].source);
      CHECK(full[i].target == keep[i].target);
    }
  }

  SUBCASE("triple dropping is seed-deterministic") {
    std::mt19937_64 rng_a(123);
    std::mt19937_64 rng_b(123);
    const auto a = make_batch(corpus, vocab, 3, 0.5, ModelKind::kFull, rng_a);
    const auto b = make_batch(corpus, vocab, 3, 0.5, ModelKind::kFull, rng_b);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].source == b[i].source);
      CHECK(a[i].target == b[i].target);
    }
    // dropping keeps whole triples: sources stay a multiple of three ids
    for (const EncodedPair& p : a) {
      CHECK(p.source.size() % 3 == 0);
      CHECK(p.source.size() >= 3);
      CHECK(p.source.size() <= 6);
    }
  }

  SUBCASE("short sources pad up to the window") {
    Sample s;
    s.id = "solo";
    s.triples.triples.push_back({"ada", "wrote", "notes"});
    s.text = {"ada", "wrote", "notes"};
    const std::vector<Sample> one{s};
    const Vocabulary small = build_vocab(one, 1);
    std::mt19937_64 rng(1);
    const auto pairs = make_batch(one, small, 5, 1.0, ModelKind::kFull, rng);
    REQUIRE(pairs.size() == 1);
    REQUIRE(pairs[0].source.size() == 5);
    CHECK(pairs[0].source[3] == Vocabulary::kPad);
    CHECK(pairs[0].source[4] == Vocabulary::kPad);
    CHECK(pairs[0].target.back() == Vocabulary::kEos);
  }

  SUBCASE("empty sample list is rejected") {
    std::mt19937_64 rng(1);
    const std::vector<Sample> none;
    CHECK_THROWS_WITH_AS(make_batch(none, vocab, 3, 0.5, ModelKind::kFull, rng),
                         "make_batch: empty sample list", ConfigError);
  }
}

TEST_CASE("stage losses are finite and differentiable") {
  const std::vector<Sample> corpus = overfit_corpus();
  const Vocabulary vocab = build_vocab(corpus, 1);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.e = 8;
  mc.k = 3;
  mc.l = 4;
  mc.kind = ModelKind::kFull;
  const Model m = Model::init(mc, 5);
  std::mt19937_64 batch_rng(7);
  const std::vector<Sample> one(corpus.begin(), corpus.begin() + 1);
  const EncodedPair pair = make_batch(one, vocab, mc.k, 1.0, ModelKind::kS2sf, batch_rng)[0];

  Tape t1;
  const Tensor loss1 = stage1_loss(t1, m, pair);
  REQUIRE(std::isfinite(loss1.item()));
  CHECK(loss1.item() > 0.0);
  t1.backward(loss1);
  for (const NamedParam& p : m.params())
    for (double g : *p.tensor.grad) REQUIRE(std::isfinite(g));
  zero_param_grads(m);

  // variant "none" in stage 2 is exactly the gold-aligned free-running score
  Tape t2;
  EncoderRun enc = encode(t2, m, pair.source);
  DecodeOptions opt;
  opt.mode = DecodeMode::kGreedy;
  opt.gold = &pair.target;
  opt.align_to_gold = true;
  const DecoderRun aligned = decode(t2, m, enc, opt);
  const double base = aligned.loss.item();

  std::mt19937_64 rng(3);
  {
    Tape t;
    PenaltyConfig pc{PenaltyVariant::kNone, 0.5, 1.0};
    CHECK(stage2_loss(t, m, pair, pc, rng).item() == base);
  }
  for (PenaltyVariant v : {PenaltyVariant::kRsp, PenaltyVariant::kRwp, PenaltyVariant::kCvg,
                           PenaltyVariant::kRl}) {
    Tape t;
    PenaltyConfig pc{v, 0.5, 1.0};
    const Tensor loss = stage2_loss(t, m, pair, pc, rng);
    REQUIRE(std::isfinite(loss.item()));
    CHECK(loss.item() >= base);  // penalties never subtract
    t.backward(loss);
    for (const NamedParam& p : m.params())
      for (double g : *p.tensor.grad) REQUIRE(std::isfinite(g));
    zero_param_grads(m);
  }
  // without a repeated span the rsp variant degenerates to the plain score
  if (!find_lrns(aligned.tokens).found()) {
    Tape t;
    PenaltyConfig pc{PenaltyVariant::kRsp, 0.5, 1.0};
    CHECK(stage2_loss(t, m, pair, pc, rng).item() == base);
  }
}

TEST_CASE("sgd_step clips by global norm and clears gradients") {
  ModelConfig mc;
  mc.vocab_size = 8;
  mc.e = 2;
  mc.k = 1;
  mc.l = 2;
  mc.kind = ModelKind::kFull;
  const Model m = Model::init(mc, 4);
  const auto ps = m.params();
  REQUIRE(ps.size() >= 2);

  CHECK(sgd_step(m, 0.5, 10.0) == 0.0);  // zero gradients: no-op

  (*ps[0].tensor.grad)[0] = 3.0;
  (*ps[1].tensor.grad)[0] = 4.0;
  const double v0 = (*ps[0].tensor.values)[0];
  const double v1 = (*ps[1].tensor.values)[0];
  const double untouched = (*ps[0].tensor.values)[1];
  CHECK(sgd_step(m, 0.5, 10.0) == 5.0);
  CHECK((*ps[0].tensor.values)[0] == v0 - 0.5 * 1.0 * 3.0);
  CHECK((*ps[1].tensor.values)[0] == v1 - 0.5 * 1.0 * 4.0);
  CHECK((*ps[0].tensor.values)[1] == untouched);
  for (const NamedParam& p : ps)
    for (double g : *p.tensor.grad) CHECK(g == 0.0);

  (*ps[0].tensor.grad)[0] = 3.0;
  (*ps[1].tensor.grad)[0] = 4.0;
  const double w0 = (*ps[0].tensor.values)[0];
  CHECK(sgd_step(m, 0.5, 1.0) == 5.0);  // returns the pre-clip norm
  CHECK((*ps[0].tensor.values)[0] == w0 - 0.5 * (1.0 / 5.0) * 3.0);

  (*ps[2].tensor.grad)[1] = 7.0;
  zero_param_grads(m);
  for (const NamedParam& p : ps)
    for (double g : *p.tensor.grad) CHECK(g == 0.0);
}

TEST_CASE("training reduces the loss on the overfit corpus") {
  TrainConfig cfg = small_config();
  cfg.zeta = 1.0;
  cfg.stage1_batches = 150;
  cfg.seed = 3;
  const ItgSplit split = split_of(overfit_corpus());

  std::vector<int> seen;
  const TrainResult result = train(cfg, split, "", [&](int n, const Model&) {
    seen.push_back(n);
  });

  REQUIRE(result.report.loss_curve.size() == 150);
  CHECK(result.report.stage_boundary_index == 150);
  CHECK(result.report.checkpoint_path.empty());
  CHECK(result.report.wall_clock_seconds > 0.0);
  REQUIRE(seen.size() == 150);
  CHECK(seen.front() == 1);
  CHECK(seen.back() == 150);
  for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i] == seen[i - 1] + 1);

  for (double v : result.report.loss_curve) {
    REQUIRE(std::isfinite(v));
    CHECK(v >= 0.0);
  }
  const double first = mean_range(result.report.loss_curve, 0, 10);
  const double last = mean_range(result.report.loss_curve, 140, 150);
  INFO("first-10 mean ", first, " last-10 mean ", last);
  CHECK(last < first);

  // 32 subjects, 4 colors, 4 sizes, is/and, color/size, 5 reserved tokens
  CHECK(result.vocab.size() == 49);
}

TEST_CASE("training is deterministic in the seed") {
  TrainConfig cfg = small_config();
  cfg.stage1_batches = 25;
  cfg.batch_size = 4;
  cfg.seed = 11;
  const ItgSplit split = split_of(overfit_corpus());

  const TrainResult a = train(cfg, split);
  const TrainResult b = train(cfg, split);
  CHECK(a.report.loss_curve == b.report.loss_curve);
  check_same_params(a.model, b.model);

  cfg.seed = 12;
  const TrainResult c = train(cfg, split);
  CHECK(a.report.loss_curve != c.report.loss_curve);
}

TEST_CASE("stage two runs every penalty variant") {
  const ItgSplit split = split_of(repetition_corpus());
  for (PenaltyVariant v : {PenaltyVariant::kRsp, PenaltyVariant::kRwp, PenaltyVariant::kCvg,
                           PenaltyVariant::kRl}) {
    TrainConfig cfg = small_config();
    cfg.variant = v;
    cfg.batch_size = 4;
    cfg.stage1_batches = 4;
    cfg.stage2_batches = 4;
    const TrainResult result = train(cfg, split);
    REQUIRE(result.report.loss_curve.size() == 8);
    CHECK(result.report.stage_boundary_index == 4);
    for (double x : result.report.loss_curve) REQUIRE(std::isfinite(x));
  }
}

TEST_CASE("train validates its inputs") {
  TrainConfig cfg = small_config();
  cfg.stage1_batches = 2;
  cfg.batch_size = 2;

  ItgSplit empty;
  CHECK_THROWS_WITH_AS(train(cfg, empty), "train: empty training split", ConfigError);

  Sample bare;
  bare.id = "bare-1";
  bare.triples.triples.push_back({"a", "b", "c"});
  ItgSplit no_text = split_of({bare});
  CHECK_THROWS_WITH_AS(train(cfg, no_text), "train: sample bare-1 has no target text",
                       ConfigError);

  TrainConfig bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train(bad, split_of(overfit_corpus())), ConfigError);

  TrainConfig blowup = cfg;
  blowup.learning_rate = 1e308;
  blowup.stage1_batches = 4;
  CHECK_THROWS_WITH_AS(train(blowup, split_of(overfit_corpus())),
                       doctest::Contains("non-finite loss at batch"), NumericError);
}

TEST_CASE("checkpoint round trip preserves every tensor") {
  ModelConfig mc;
  mc.vocab_size = 30;
  mc.e = 8;
  mc.k = 3;
  mc.l = 4;
  mc.kind = ModelKind::kFull;
  const Model m = Model::init(mc, 21);
  const std::string dir = scratch_dir("ckpt");
  const std::string path = dir + "/model.ckpt";

  save_checkpoint(m, path);
  const Model loaded = load_checkpoint(path, mc);
  check_same_params(m, loaded);

  const std::string again = dir + "/model2.ckpt";
  save_checkpoint(loaded, again);
  CHECK(read_bytes(path) == read_bytes(again));
}

TEST_CASE("checkpoint rejects shape and format mismatches") {
  ModelConfig mc;
  mc.vocab_size = 30;
  mc.e = 8;
  mc.k = 3;
  mc.l = 4;
  mc.kind = ModelKind::kFull;
  const Model m = Model::init(mc, 21);
  const std::string dir = scratch_dir("ckpt-bad");
  const std::string path = dir + "/model.ckpt";
  save_checkpoint(m, path);

  ModelConfig wrong_l = mc;
  wrong_l.l = 6;
  CHECK_THROWS_WITH_AS(load_checkpoint(path, wrong_l),
                       doctest::Contains("incompatible checkpoint: tensor \"mem.V\""),
                       CheckpointError);

  ModelConfig wrong_vocab = mc;
  wrong_vocab.vocab_size = 31;
  CHECK_THROWS_WITH_AS(load_checkpoint(path, wrong_vocab), doctest::Contains("emb.table"),
                       CheckpointError);

  CHECK_THROWS_WITH_AS(load_checkpoint(dir + "/absent.ckpt", mc),
                       doctest::Contains("cannot open checkpoint"), IoError);

  const std::string junk = dir + "/junk.ckpt";
  {
    std::ofstream out(junk, std::ios::binary);
    out << "junk data here";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(junk, mc), doctest::Contains("is not a checkpoint file"),
                       CheckpointError);

  const std::string few = dir + "/few.ckpt";
  {
    std::ofstream out(few, std::ios::binary);
    out.write("IMAG1", 5);
    const std::uint32_t three = 3;
    out.write(reinterpret_cast<const char*>(&three), sizeof three);
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(few, mc), doctest::Contains("holds 3 tensors"),
                       CheckpointError);

  const std::string full = read_bytes(path);
  const std::string cut = dir + "/cut.ckpt";
  {
    std::ofstream out(cut, std::ios::binary);
    out.write(full.data(), static_cast<std::streamsize>(full.size() / 2));
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(cut, mc), doctest::Contains("truncated checkpoint"),
                       CheckpointError);
}

TEST_CASE("model bundles save with sidecars") {
  const std::vector<Sample> corpus = overfit_corpus();
  const Vocabulary vocab = build_vocab(corpus, 1);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.e = 8;
  mc.k = 3;
  mc.l = 4;
  mc.kind = ModelKind::kS2s;
  const Model m = Model::init(mc, 2);
  const std::string dir = scratch_dir("bundle");
  const std::string path = dir + "/model.ckpt";

  save_model(m, vocab, path);
  CHECK(std::filesystem::exists(path));
  CHECK(std::filesystem::exists(path + ".vocab"));
  CHECK(std::filesystem::exists(path + ".meta"));

  std::ifstream meta(path + ".meta");
  const nlohmann::json j = nlohmann::json::parse(meta);
  CHECK(j.at("vocab_size").get<int>() == vocab.size());
  CHECK(j.at("e").get<int>() == 8);
  CHECK(j.at("k").get<int>() == 3);
  CHECK(j.at("l").get<int>() == 4);
  CHECK(j.at("kind").get<std::string>() == "s2s");

  const LoadedModel loaded = load_model(path);
  CHECK(loaded.model.cfg.vocab_size == mc.vocab_size);
  CHECK(loaded.model.cfg.e == mc.e);
  CHECK(loaded.model.cfg.k == mc.k);
  CHECK(loaded.model.cfg.l == mc.l);
  CHECK(loaded.model.cfg.kind == ModelKind::kS2s);
  check_same_params(m, loaded.model);
  REQUIRE(loaded.vocab.size() == vocab.size());
  for (int i = 0; i < vocab.size(); ++i) CHECK(loaded.vocab.token(i) == vocab.token(i));

  Sample tiny;
  tiny.id = "tiny";
  tiny.triples.triples.push_back({"a", "b", "c"});
  tiny.text = {"a"};
  const Vocabulary small = build_vocab(std::vector<Sample>{tiny}, 1);
  CHECK_THROWS_WITH_AS(save_model(m, small, dir + "/other.ckpt"),
                       doctest::Contains("does not match"), ConfigError);

  CHECK_THROWS_WITH_AS(load_model(dir + "/absent.ckpt"), doctest::Contains(".meta"), IoError);

  const std::string corrupt = dir + "/corrupt.ckpt";
  {
    std::ofstream out(corrupt + ".meta");
    out << "{nope";
  }
  CHECK_THROWS_WITH_AS(load_model(corrupt), doctest::Contains("not valid metadata"),
                       CheckpointError);
}

TEST_CASE("train saves a checkpoint bundle when asked") {
  TrainConfig cfg = small_config();
  cfg.stage1_batches = 10;
  cfg.batch_size = 4;
  const ItgSplit split = split_of(overfit_corpus());
  const std::string dir = scratch_dir("train-ckpt");
  const std::string path = dir + "/trained.ckpt";

  const TrainResult result = train(cfg, split, path);
  CHECK(result.report.checkpoint_path == path);
  CHECK(std::filesystem::exists(path));
  CHECK(std::filesystem::exists(path + ".vocab"));
  CHECK(std::filesystem::exists(path + ".meta"));

  const LoadedModel loaded = load_model(path);
  check_same_params(result.model, loaded.model);
  CHECK(loaded.vocab.size() == result.vocab.size());
  CHECK(loaded.model.cfg.kind == cfg.model_kind);
}

TEST_CASE("write_train_report emits json") {
  TrainReport report;
  report.loss_curve = {1.5, 0.75, 0.5};
  report.stage_boundary_index = 2;
  report.wall_clock_seconds = 2.5;
  report.checkpoint_path = "runs/model.ckpt";
  const std::string dir = scratch_dir("report");
  const std::string path = dir + "/train.json";
  write_train_report(path, report);

  std::ifstream in(path);
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j.at("loss_curve").get<std::vector<double>>() == report.loss_curve);
  CHECK(j.at("stage_boundary_index").get<int>() == 2);
  CHECK(j.at("wall_clock_seconds").get<double>() == 2.5);
  CHECK(j.at("checkpoint_path").get<std::string>() == "runs/model.ckpt");

  CHECK_THROWS_WITH_AS(write_train_report(dir + "/missing-dir/train.json", report),
                       doctest::Contains("cannot write train report"), IoError);
}
