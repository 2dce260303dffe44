#include "imag/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "imag/error.hpp"

namespace imag {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::vector<std::string> tokenize_entity(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == '_') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> tokenize_text(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

Vocabulary::Vocabulary() {
  id_to_token_ = {"<pad>", "<bos>", "<eos>", "<unk>", "<sep>"};
  for (int i = 0; i < kReservedCount; ++i) token_to_id_[id_to_token_[i]] = i;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size())
    throw VocabError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(size()));
  return id_to_token_[id];
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  const int new_id = size();
  token_to_id_[token] = new_id;
  id_to_token_.push_back(token);
  return new_id;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary to " + path);
  for (int i = kReservedCount; i < size(); ++i) out << id_to_token_[i] << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary from " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) v.add(line);
  }
  return v;
}

Vocabulary build_vocab(std::span<const Sample> samples, int min_freq) {
  if (min_freq < 1) throw ConfigError("build_vocab: min_freq must be >= 1");
  std::unordered_map<std::string, std::int64_t> counts;
  auto count_all = [&counts](const std::vector<std::string>& toks) {
    for (const auto& t : toks) ++counts[t];
  };
  for (const Sample& s : samples) {
    for (const Triple& t : s.triples.triples) {
      count_all(tokenize_entity(t.head));
      count_all(tokenize_entity(t.relation));
      count_all(tokenize_entity(t.tail));
    }
    count_all(s.text);
  }
  std::vector<std::pair<std::string, std::int64_t>> ordered(counts.begin(), counts.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, cnt] : ordered)
    if (cnt >= min_freq) v.add(tok);
  return v;
}

namespace {

Sample parse_record(const json& j, std::size_t line_no) {
  Sample s;
  if (!j.is_object()) throw ParseError("line " + std::to_string(line_no) + ": record is not an object");
  if (!j.contains("triples") || !j["triples"].is_array())
    throw ParseError("line " + std::to_string(line_no) + ": missing \"triples\" array");
  if (j["triples"].empty())
    throw ParseError("line " + std::to_string(line_no) + ": rejected record with empty triples array");
  for (const auto& t : j["triples"]) {
    if (!t.is_object() || !t.contains("h") || !t.contains("r") || !t.contains("t") ||
        !t["h"].is_string() || !t["r"].is_string() || !t["t"].is_string())
      throw ParseError("line " + std::to_string(line_no) + ": triple needs string \"h\",\"r\",\"t\"");
    Triple triple{t["h"].get<std::string>(), t["r"].get<std::string>(), t["t"].get<std::string>()};
    if (triple.head.empty() || triple.relation.empty() || triple.tail.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty triple field");
    s.triples.triples.push_back(std::move(triple));
  }
  if (j.contains("text") && !j["text"].is_null()) {
    if (!j["text"].is_string())
      throw ParseError("line " + std::to_string(line_no) + ": \"text\" must be a string");
    s.text = tokenize_text(j["text"].get<std::string>());
  }
  if (j.contains("id") && !j["id"].is_string())
    throw ParseError("line " + std::to_string(line_no) + ": \"id\" must be a string");
  s.id = j.contains("id") ? j["id"].get<std::string>() : "line-" + std::to_string(line_no);
  return s;
}

}  // namespace

std::vector<Sample> parse_corpus(std::istream& in) {
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ParseError("line " + std::to_string(line_no) + ": invalid record");
    samples.push_back(parse_record(j, line_no));
  }
  return samples;
}

std::vector<Sample> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path);
  return parse_corpus(in);
}

void write_corpus(const std::string& path, std::span<const Sample> samples, bool include_text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus " + path);
  for (const Sample& s : samples) {
    ordered_json j;
    j["id"] = s.id;
    j["triples"] = json::array();
    for (const Triple& t : s.triples.triples)
      j["triples"].push_back({{"h", t.head}, {"r", t.relation}, {"t", t.tail}});
    if (include_text && !s.text.empty()) {
      std::string joined;
      for (std::size_t i = 0; i < s.text.size(); ++i) {
        if (i) joined += ' ';
        joined += s.text[i];
      }
      j["text"] = joined;
    }
    out << j.dump() << "\n";
  }
}

namespace {

SplitStats stats_for(std::span<const Sample> samples, bool with_text) {
  SplitStats st;
  st.pairs = static_cast<int>(samples.size());
  if (samples.empty()) return st;
  double triples = 0.0, words = 0.0;
  for (const Sample& s : samples) {
    triples += s.triples.size();
    words += static_cast<double>(s.text.size());
  }
  st.avg_triples = triples / st.pairs;
  st.avg_target_len = with_text ? words / st.pairs : 0.0;
  return st;
}

}  // namespace

ItgSplit derive_itg_split(std::span<const Sample> corpus, std::uint64_t seed,
                          const SplitFractions& fractions) {
  if (corpus.empty()) throw ConfigError("derive_itg_split: empty corpus");
  if (fractions.dev < 0.0 || fractions.test < 0.0 || fractions.dev + fractions.test > 1.0)
    throw ConfigError("derive_itg_split: bad dev/test fractions");
  ItgSplit split;
  split.seed = seed;
  std::vector<Sample> remainder;
  for (const Sample& s : corpus) {
    if (s.triples.size() >= 2)
      split.train.push_back(s);
    else
      remainder.push_back(s);
  }
  if (split.train.empty())
    throw ConfigError("derive_itg_split: no sample has >= 2 triples, cannot build a training set");

  std::mt19937_64 rng(seed);
  std::shuffle(split.train.begin(), split.train.end(), rng);
  std::shuffle(remainder.begin(), remainder.end(), rng);

  const auto total = static_cast<double>(corpus.size());
  std::size_t dev_n = std::min(remainder.size(),
                               static_cast<std::size_t>(fractions.dev * total + 0.5));
  std::size_t test_n = std::min(remainder.size() - dev_n,
                                static_cast<std::size_t>(fractions.test * total + 0.5));
  for (std::size_t i = 0; i < remainder.size(); ++i) {
    Sample s = remainder[i];
    if (i < dev_n) {
      s.text.clear();  // dev/test carry no gold text; evaluation is pseudo-target based
      split.dev.push_back(std::move(s));
    } else if (i < dev_n + test_n) {
      s.text.clear();
      split.test.push_back(std::move(s));
    } else {
      split.one_triple.push_back(std::move(s));
    }
  }
  split.train_stats = stats_for(split.train, true);
  split.dev_stats = stats_for(split.dev, false);
  split.test_stats = stats_for(split.test, false);
  return split;
}

void write_split_manifest(const std::string& path, const ItgSplit& split) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write split manifest " + path);
  ordered_json j;
  j["seed"] = split.seed;
  auto ids_of = [](const std::vector<Sample>& ss) {
    std::vector<std::string> ids;
    ids.reserve(ss.size());
    for (const Sample& s : ss) ids.push_back(s.id);
    return ids;
  };
  j["train"] = ids_of(split.train);
  j["dev"] = ids_of(split.dev);
  j["test"] = ids_of(split.test);
  j["one_triple"] = ids_of(split.one_triple);
  out << j.dump(2) << "\n";
}

std::vector<std::string> flatten_triples(const TripleSet& g) {
  std::vector<std::string> out;
  for (const Triple& t : g.triples) {
    for (auto& tok : tokenize_entity(t.head)) out.push_back(std::move(tok));
    for (auto& tok : tokenize_entity(t.relation)) out.push_back(std::move(tok));
    for (auto& tok : tokenize_entity(t.tail)) out.push_back(std::move(tok));
  }
  return out;
}

TripleSet drop_triples(const TripleSet& g, double zeta, std::mt19937_64& rng) {
  if (zeta <= 0.0 || zeta > 1.0)
    throw ConfigError("drop_triples: preserve probability must be in (0, 1], got " +
                      std::to_string(zeta));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  TripleSet kept;
  for (const Triple& t : g.triples)
    if (unif(rng) < zeta) kept.triples.push_back(t);
  if (kept.triples.empty() && g.size() > 0) {
    std::uniform_int_distribution<int> pickone(0, g.size() - 1);
    kept.triples.push_back(g.triples[pickone(rng)]);
  }
  return kept;
}

std::vector<std::string> build_pseudo_target(std::span<const std::string> entities,
                                             std::span<const Sample> one_triple_corpus) {
  std::vector<std::string> out;
  for (const Sample& s : one_triple_corpus) {
    if (s.triples.size() != 1 || s.text.empty())
      throw ConfigError("build_pseudo_target: corpus must hold 1-triple samples with text");
    const Triple& t = s.triples.triples.front();
    const bool match = std::any_of(entities.begin(), entities.end(), [&t](const std::string& e) {
      return t.head == e || t.tail == e;
    });
    if (match) out.insert(out.end(), s.text.begin(), s.text.end());
  }
  return out;
}

void pad_to_min_length(std::vector<std::string>& tokens, int k, const std::string& pad_token) {
  if (k < 1) throw ConfigError("pad_to_min_length: k must be >= 1");
  while (static_cast<int>(tokens.size()) < k) tokens.push_back(pad_token);
}

void pad_to_min_length(std::vector<int>& ids, int k, int pad_id) {
  if (k < 1) throw ConfigError("pad_to_min_length: k must be >= 1");
  while (static_cast<int>(ids.size()) < k) ids.push_back(pad_id);
}

}  // namespace imag
