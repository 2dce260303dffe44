#pragma once

#include <span>
#include <string>
#include <vector>

#include "imag/dataset.hpp"
#include "imag/seq2seq.hpp"

namespace imag {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Shared tokenization for every metric: lowercase, runs of alphanumerics as
// tokens, every other non-space character its own token.
std::vector<std::string> metric_tokenize(const std::string& text);
std::vector<std::string> metric_tokenize(std::span<const std::string> words);

// Clipped n-gram overlap; empty candidate or reference scores zero.
RougeScore rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference,
                   int n);

// Longest-common-subsequence overlap.
RougeScore rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference);

// Counting units are unigrams plus skip-bigrams at most four positions
// apart (j - i <= 4 for an ordered pair of positions i < j).
RougeScore rouge_su4(std::span<const std::string> candidate,
                     std::span<const std::string> reference);

struct SentenceStats {
  int len = 0;
  double lrnsr = 0.0;  // repeated-span length over sentence length
  double drate = 0.0;  // distinct tokens over sentence length
};

SentenceStats sentence_stats(std::span<const std::string> tokens);

// True when the generated tokens contain at least 80% of the sentence's
// tokens, counted as multisets; the boundary is inclusive and an empty
// sentence is never covered.
bool covers(std::span<const std::string> generated, std::span<const std::string> sentence);

struct EvalReport {
  RougeScore rouge_l, rouge_2, rouge_su4;
  double len = 0.0;
  double lrnsr = 0.0;
  double drate = 0.0;
  int pairs = 0;
  int empty_pseudo_targets = 0;  // excluded from the ROUGE averages only
};

EvalReport evaluate_corpus(std::span<const GenerationRecord> generations,
                           std::span<const std::vector<std::string>> pseudo_targets);

struct AcquisitionReport {
  double cr = 0.0;  // co-occurrence ratio
  double pc = 0.0;  // pair-count correlation
  double cc = 0.0;  // covered-count correlation
  double ar = 0.0;  // acquisition ratio
  bool cr_flagged = false;  // set when the pair set was empty
  bool pc_flagged = false;  // set when the correlation was undefined
  bool cc_flagged = false;
};

AcquisitionReport acquisition_analysis(std::span<const GenerationRecord> generations,
                                       std::span<const Sample> inputs,
                                       std::span<const Sample> one_triple_corpus,
                                       std::span<const Sample> train_split);

// Undefined correlations (under two points, or zero variance on either
// side) report 0 and set *flagged.
double pearson(std::span<const double> x, std::span<const double> y, bool* flagged);

void write_eval_report(const std::string& path, const EvalReport& report);
std::string format_eval_table(const EvalReport& report, const std::string& label);
void write_acquisition_report(const std::string& path, const AcquisitionReport& report);
std::string format_acquisition_table(const AcquisitionReport& report, const std::string& label);

}  // namespace imag
