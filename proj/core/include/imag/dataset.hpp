#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace imag {

/// One knowledge fact. The raw strings are kept verbatim (entity matching
/// for pseudo-targets is exact on them); token views split on whitespace
/// and underscores.
struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
};

struct TripleSet {
  std::vector<Triple> triples;

  int size() const { return static_cast<int>(triples.size()); }
};

struct Sample {
  TripleSet triples;
  std::vector<std::string> text;  // target tokens; empty for unlabeled samples
  std::string id;
};

/// Splits on whitespace and underscores, dropping empty pieces.
std::vector<std::string> tokenize_entity(const std::string& s);
/// Splits on whitespace only.
std::vector<std::string> tokenize_text(const std::string& s);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kSep = 4;
  static constexpr int kReservedCount = 5;

  Vocabulary();

  /// Id for a token, kUnk when absent.
  int id(const std::string& token) const;
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

  /// Appends a non-reserved token; no-op if present. Returns its id.
  int add(const std::string& token);

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

/// Frequency-filtered vocabulary over all triple tokens and text tokens.
/// Ids are assigned by descending frequency, ties broken lexicographically.
Vocabulary build_vocab(std::span<const Sample> samples, int min_freq);

struct SplitStats {
  int pairs = 0;
  double avg_triples = 0.0;
  double avg_target_len = 0.0;  // meaningful for the train partition only
};

struct ItgSplit {
  std::vector<Sample> train;     // every sample has >= 2 triples; text kept
  std::vector<Sample> dev;       // text stripped
  std::vector<Sample> test;      // text stripped
  std::vector<Sample> one_triple;  // held-out 1-triple samples with text
  SplitStats train_stats, dev_stats, test_stats;
  std::uint64_t seed = 0;
};

struct SplitFractions {
  // Defaults follow the observed corpus proportions 706 and 1501 of 35815.
  double dev = 706.0 / 35815.0;
  double test = 1501.0 / 35815.0;
};

/// Reads line-delimited records, one JSON object per line with a "triples"
/// array of {"h","r","t"} and an optional "text" string. Throws ParseError
/// naming the 1-based line number on malformed input.
std::vector<Sample> parse_corpus(std::istream& in);
std::vector<Sample> load_corpus(const std::string& path);
void write_corpus(const std::string& path, std::span<const Sample> samples,
                  bool include_text);

/// Training partition takes every sample with at least two triples,
/// shuffled by seed. Dev and test are drawn from the remaining samples per
/// the configured fractions; what is left of the remainder becomes the
/// 1-triple reference corpus.
ItgSplit derive_itg_split(std::span<const Sample> corpus, std::uint64_t seed,
                          const SplitFractions& fractions = {});

void write_split_manifest(const std::string& path, const ItgSplit& split);

/// Word sequence h1..r1..t1..hc..rc..tc in triple order, no separators.
std::vector<std::string> flatten_triples(const TripleSet& g);

/// Keeps each triple independently with probability zeta; when the draw
/// would drop everything, one triple is kept uniformly at random so the
/// flattened sequence is never empty. Bypass this entirely at test time.
TripleSet drop_triples(const TripleSet& g, double zeta, std::mt19937_64& rng);

/// Concatenation, in corpus order, of the texts of 1-triple samples whose
/// head or tail exactly equals one of the query entities.
std::vector<std::string> build_pseudo_target(std::span<const std::string> entities,
                                             std::span<const Sample> one_triple_corpus);

/// Appends pad_token until tokens.size() >= k.
void pad_to_min_length(std::vector<std::string>& tokens, int k,
                       const std::string& pad_token);
void pad_to_min_length(std::vector<int>& ids, int k, int pad_id);

}  // namespace imag
