#include "imag/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "imag/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace imag {

namespace {

constexpr char kMagic[5] = {'I', 'M', 'A', 'G', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw CheckpointError("truncated checkpoint " + path);
  return v;
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw CheckpointError("truncated checkpoint " + path);
  return v;
}

}  // namespace

void save_checkpoint(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  const auto params = m.params();
  out.write(kMagic, sizeof kMagic);
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  std::uint64_t offset = 0;
  for (const NamedParam& p : params) {
    write_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u32(out, static_cast<std::uint32_t>(p.tensor.rows));
    write_u32(out, static_cast<std::uint32_t>(p.tensor.cols));
    write_u64(out, offset);
    offset += static_cast<std::uint64_t>(p.tensor.size()) * sizeof(double);
  }
  for (const NamedParam& p : params)
    out.write(reinterpret_cast<const char*>(p.tensor.values->data()),
              static_cast<std::streamsize>(p.tensor.size() * sizeof(double)));
  if (!out) throw IoError("write failed for checkpoint " + path);
}

Model load_checkpoint(const std::string& path, const ModelConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw CheckpointError(path + " is not a checkpoint file");

  Model m = Model::init(cfg, 0);  // shapes only; every value is overwritten
  auto params = m.params();
  const std::uint32_t count = read_u32(in, path);
  if (count != params.size())
    throw CheckpointError("checkpoint " + path + " holds " + std::to_string(count) +
                          " tensors, expected " + std::to_string(params.size()));
  for (NamedParam& p : params) {
    const std::uint32_t name_len = read_u32(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw CheckpointError("truncated checkpoint " + path);
    if (name != p.name)
      throw CheckpointError("checkpoint " + path + " lists tensor \"" + name + "\" where \"" +
                            p.name + "\" was expected");
    const auto rows = static_cast<int>(read_u32(in, path));
    const auto cols = static_cast<int>(read_u32(in, path));
    read_u64(in, path);  // offset implied by registry order
    if (rows != p.tensor.rows || cols != p.tensor.cols)
      throw CheckpointError("incompatible checkpoint: tensor \"" + p.name + "\" is " +
                            std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                            p.tensor.shape_str());
  }
  for (NamedParam& p : params) {
    if (!in.read(reinterpret_cast<char*>(p.tensor.values->data()),
                 static_cast<std::streamsize>(p.tensor.size() * sizeof(double))))
      throw CheckpointError("truncated checkpoint " + path);
  }
  return m;
}

void save_model(const Model& m, const Vocabulary& vocab, const std::string& path) {
  if (m.cfg.vocab_size != vocab.size())
    throw ConfigError("save_model: vocabulary size " + std::to_string(vocab.size()) +
                      " does not match the model's " + std::to_string(m.cfg.vocab_size));
  save_checkpoint(m, path);
  vocab.save(path + ".vocab");
  std::ofstream meta(path + ".meta");
  if (!meta) throw IoError("cannot write " + path + ".meta");
  nlohmann::ordered_json j;
  j["vocab_size"] = m.cfg.vocab_size;
  j["e"] = m.cfg.e;
  j["k"] = m.cfg.k;
  j["l"] = m.cfg.l;
  j["kind"] = to_string(m.cfg.kind);
  meta << j.dump(2) << "\n";
}

LoadedModel load_model(const std::string& path) {
  std::ifstream meta(path + ".meta");
  if (!meta) throw IoError("cannot read " + path + ".meta");
  nlohmann::json j = nlohmann::json::parse(meta, nullptr, false);
  if (j.is_discarded()) throw CheckpointError(path + ".meta is not valid metadata");
  ModelConfig cfg;
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.e = j.at("e").get<int>();
  cfg.k = j.at("k").get<int>();
  cfg.l = j.at("l").get<int>();
  cfg.kind = parse_model_kind(j.at("kind").get<std::string>());

  LoadedModel loaded{load_checkpoint(path, cfg), Vocabulary::load(path + ".vocab")};
  if (loaded.vocab.size() != cfg.vocab_size)
    throw CheckpointError("vocabulary sidecar of " + path + " has " +
                          std::to_string(loaded.vocab.size()) + " tokens, metadata says " +
                          std::to_string(cfg.vocab_size));
  return loaded;
}

}  // namespace imag
