#include "imag/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "imag/error.hpp"
#include "imag/repetition.hpp"

namespace imag {

std::vector<std::string> metric_tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      if (!std::isspace(ch)) out.push_back(std::string(1, static_cast<char>(ch)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> metric_tokenize(std::span<const std::string> words) {
  std::string joined;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) joined += ' ';
    joined += words[i];
  }
  return metric_tokenize(joined);
}

namespace {

RougeScore score_from(double overlap, double cand_units, double ref_units) {
  RougeScore s;
  if (cand_units <= 0.0 || ref_units <= 0.0) return s;
  s.precision = overlap / cand_units;
  s.recall = overlap / ref_units;
  if (s.precision + s.recall > 0.0)
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

using Counts = std::unordered_map<std::string, int>;

double clipped_overlap(const Counts& cand, const Counts& ref) {
  double overlap = 0.0;
  for (const auto& [unit, c] : cand) {
    const auto it = ref.find(unit);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  return overlap;
}

Counts ngram_counts(std::span<const std::string> tokens, int n) {
  Counts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      key += tokens[i + j];
      key += '\x1f';
    }
    ++counts[key];
  }
  return counts;
}

// Unigrams and gap-limited skip-bigrams, length-prefixed so keys never clash.
Counts su4_counts(std::span<const std::string> tokens) {
  Counts counts;
  for (const std::string& t : tokens) ++counts["1:" + t];
  for (std::size_t i = 0; i < tokens.size(); ++i)
    for (std::size_t j = i + 1; j < tokens.size() && j - i <= 4; ++j)
      ++counts["2:" + std::to_string(tokens[i].size()) + ":" + tokens[i] + tokens[j]];
  return counts;
}

}  // namespace

RougeScore rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference,
                   int n) {
  if (n < 1) throw ConfigError("rouge_n: n must be >= 1");
  const Counts cand = ngram_counts(candidate, n);
  const Counts ref = ngram_counts(reference, n);
  double cand_total = 0.0, ref_total = 0.0;
  for (const auto& [k, v] : cand) cand_total += v;
  for (const auto& [k, v] : ref) ref_total += v;
  return score_from(clipped_overlap(cand, ref), cand_total, ref_total);
}

RougeScore rouge_l(std::span<const std::string> candidate,
                   std::span<const std::string> reference) {
  const std::size_t a = candidate.size(), b = reference.size();
  if (a == 0 || b == 0) return {};
  std::vector<int> prev(b + 1, 0), cur(b + 1, 0);
  for (std::size_t i = 1; i <= a; ++i) {
    for (std::size_t j = 1; j <= b; ++j) {
      cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1
                                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return score_from(prev[b], static_cast<double>(a), static_cast<double>(b));
}

RougeScore rouge_su4(std::span<const std::string> candidate,
                     std::span<const std::string> reference) {
  if (candidate.empty() || reference.empty()) return {};
  const Counts cand = su4_counts(candidate);
  const Counts ref = su4_counts(reference);
  double cand_total = 0.0, ref_total = 0.0;
  for (const auto& [k, v] : cand) cand_total += v;
  for (const auto& [k, v] : ref) ref_total += v;
  return score_from(clipped_overlap(cand, ref), cand_total, ref_total);
}

SentenceStats sentence_stats(std::span<const std::string> tokens) {
  SentenceStats st;
  st.len = static_cast<int>(tokens.size());
  if (st.len == 0) return st;
  std::unordered_map<std::string, int> intern;
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) {
    auto it = intern.find(t);
    if (it == intern.end()) it = intern.emplace(t, static_cast<int>(intern.size())).first;
    ids.push_back(it->second);
  }
  st.lrnsr = static_cast<double>(find_lrns(ids).length()) / st.len;
  st.drate = static_cast<double>(intern.size()) / st.len;
  return st;
}

bool covers(std::span<const std::string> generated, std::span<const std::string> sentence) {
  if (sentence.empty()) return false;
  std::unordered_map<std::string, int> have;
  for (const std::string& t : generated) ++have[t];
  long matched = 0;
  std::unordered_map<std::string, int> needed;
  for (const std::string& t : sentence) ++needed[t];
  for (const auto& [tok, cnt] : needed) {
    const auto it = have.find(tok);
    if (it != have.end()) matched += std::min(cnt, it->second);
  }
  // 80% boundary inclusive, kept exact with integer arithmetic.
  return matched * 5 >= static_cast<long>(sentence.size()) * 4;
}

EvalReport evaluate_corpus(std::span<const GenerationRecord> generations,
                           std::span<const std::vector<std::string>> pseudo_targets) {
  if (generations.size() != pseudo_targets.size())
    throw ConfigError("evaluate_corpus: " + std::to_string(generations.size()) +
                      " generations vs " + std::to_string(pseudo_targets.size()) +
                      " pseudo-targets (must align)");
  EvalReport rep;
  rep.pairs = static_cast<int>(generations.size());
  if (rep.pairs == 0) return rep;

  auto acc = [](RougeScore& into, const RougeScore& s) {
    into.precision += s.precision;
    into.recall += s.recall;
    into.f1 += s.f1;
  };
  int scored = 0;
  for (std::size_t i = 0; i < generations.size(); ++i) {
    const auto cand = metric_tokenize(generations[i].output);
    const auto ref = metric_tokenize(pseudo_targets[i]);
    const SentenceStats st = sentence_stats(cand);
    rep.len += st.len;
    rep.lrnsr += st.lrnsr;
    rep.drate += st.drate;
    if (ref.empty()) {
      ++rep.empty_pseudo_targets;
      continue;
    }
    ++scored;
    acc(rep.rouge_l, rouge_l(cand, ref));
    acc(rep.rouge_2, rouge_n(cand, ref, 2));
    acc(rep.rouge_su4, rouge_su4(cand, ref));
  }
  rep.len /= rep.pairs;
  rep.lrnsr /= rep.pairs;
  rep.drate /= rep.pairs;
  if (scored > 0) {
    for (RougeScore* r : {&rep.rouge_l, &rep.rouge_2, &rep.rouge_su4}) {
      r->precision /= scored;
      r->recall /= scored;
      r->f1 /= scored;
    }
  }
  return rep;
}

double pearson(std::span<const double> x, std::span<const double> y, bool* flagged) {
  if (flagged) *flagged = false;
  if (x.size() != y.size()) throw ConfigError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) {
    if (flagged) *flagged = true;
    return 0.0;
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    if (flagged) *flagged = true;
    return 0.0;
  }
  return sxy / std::sqrt(sxx * syy);
}

namespace {

std::string pair_key(const std::string& a, const std::string& b) {
  const std::string& lo = a <= b ? a : b;
  const std::string& hi = a <= b ? b : a;
  return std::to_string(lo.size()) + ":" + lo + hi;
}

}  // namespace

AcquisitionReport acquisition_analysis(std::span<const GenerationRecord> generations,
                                       std::span<const Sample> inputs,
                                       std::span<const Sample> one_triple_corpus,
                                       std::span<const Sample> train_split) {
  if (generations.size() != inputs.size())
    throw ConfigError("acquisition_analysis: " + std::to_string(generations.size()) +
                      " generations vs " + std::to_string(inputs.size()) + " inputs (must align)");
  for (std::size_t i = 0; i < generations.size(); ++i)
    if (!generations[i].id.empty() && generations[i].id != inputs[i].id)
      throw ConfigError("acquisition_analysis: record " + std::to_string(i) + " pairs \"" +
                        generations[i].id + "\" with input \"" + inputs[i].id + "\"");

  // Training-side statistics: per-sample relation-pair co-occurrence (one
  // count per sample per distinct pair) and per-triple relation frequency.
  std::unordered_map<std::string, double> co_count;
  std::unordered_map<std::string, double> rel_freq;
  for (const Sample& s : train_split) {
    std::set<std::string> pairs_here;
    const auto& ts = s.triples.triples;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      rel_freq[ts[i].relation] += 1.0;
      for (std::size_t j = i + 1; j < ts.size(); ++j)
        pairs_here.insert(pair_key(ts[i].relation, ts[j].relation));
    }
    for (const std::string& k : pairs_here) co_count[k] += 1.0;
  }

  // Pre-tokenized sentences of the 1-triple pool.
  std::vector<std::vector<std::string>> pool_tokens;
  pool_tokens.reserve(one_triple_corpus.size());
  for (const Sample& s : one_triple_corpus) pool_tokens.push_back(metric_tokenize(s.text));

  double pair_total = 0.0, pair_coexist = 0.0;
  double new_covered = 0.0, input_triples = 0.0;
  std::map<std::string, double> observed_pairs;  // ordered for determinism
  std::map<std::string, double> covered_counts;

  for (std::size_t g = 0; g < generations.size(); ++g) {
    const auto gen_tokens = metric_tokenize(generations[g].output);
    std::vector<std::string> input_rels;
    std::set<std::string> input_rel_set;
    for (const Triple& t : inputs[g].triples.triples) {
      input_rels.push_back(t.relation);
      input_rel_set.insert(t.relation);
    }
    input_triples += static_cast<double>(inputs[g].triples.size());

    std::vector<std::string> covered_rels;
    for (std::size_t p = 0; p < one_triple_corpus.size(); ++p) {
      if (pool_tokens[p].empty()) continue;
      if (covers(gen_tokens, pool_tokens[p]))
        covered_rels.push_back(one_triple_corpus[p].triples.triples.front().relation);
    }
    for (const std::string& got : covered_rels) {
      covered_counts[got] += 1.0;
      if (!input_rel_set.count(got)) new_covered += 1.0;
      for (const std::string& in : input_rels) {
        pair_total += 1.0;
        const std::string key = pair_key(in, got);
        observed_pairs[key] += 1.0;
        if (co_count.count(key)) pair_coexist += 1.0;
      }
    }
  }

  AcquisitionReport rep;
  if (pair_total > 0.0) {
    rep.cr = pair_coexist / pair_total;
  } else {
    rep.cr_flagged = true;
  }
  std::vector<double> px, py;
  for (const auto& [key, cnt] : observed_pairs) {
    px.push_back(cnt);
    const auto it = co_count.find(key);
    py.push_back(it == co_count.end() ? 0.0 : it->second);
  }
  rep.pc = pearson(px, py, &rep.pc_flagged);
  std::vector<double> cx, cy;
  for (const auto& [rel, cnt] : covered_counts) {
    cx.push_back(cnt);
    const auto it = rel_freq.find(rel);
    cy.push_back(it == rel_freq.end() ? 0.0 : it->second);
  }
  rep.cc = pearson(cx, cy, &rep.cc_flagged);
  rep.ar = input_triples > 0.0 ? new_covered / input_triples : 0.0;
  return rep;
}

void write_eval_report(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write evaluation report " + path);
  nlohmann::ordered_json j;
  auto rouge = [](const RougeScore& s) {
    return nlohmann::ordered_json{
        {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  };
  j["rouge_l"] = rouge(report.rouge_l);
  j["rouge_2"] = rouge(report.rouge_2);
  j["rouge_su4"] = rouge(report.rouge_su4);
  j["len"] = report.len;
  j["lrnsr"] = report.lrnsr;
  j["drate"] = report.drate;
  j["pairs"] = report.pairs;
  j["empty_pseudo_targets"] = report.empty_pseudo_targets;
  out << j.dump(2) << "\n";
}

std::string format_eval_table(const EvalReport& report, const std::string& label) {
  char buf[256];
  std::string out = "model            R_L    P_L    F_L    R_2    P_2    F_2    R_SU4  P_SU4  F_SU4  LEN    LRNSR  DRATE\n";
  std::snprintf(buf, sizeof buf,
                "%-16s %-6.3f %-6.3f %-6.3f %-6.3f %-6.3f %-6.3f %-6.3f %-6.3f %-6.3f %-6.1f %-6.3f %-6.3f\n",
                label.c_str(), report.rouge_l.recall, report.rouge_l.precision,
                report.rouge_l.f1, report.rouge_2.recall, report.rouge_2.precision,
                report.rouge_2.f1, report.rouge_su4.recall, report.rouge_su4.precision,
                report.rouge_su4.f1, report.len, report.lrnsr, report.drate);
  return out + buf;
}

void write_acquisition_report(const std::string& path, const AcquisitionReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write acquisition report " + path);
  nlohmann::ordered_json j;
  j["cr"] = report.cr;
  j["pc"] = report.pc;
  j["cc"] = report.cc;
  j["ar"] = report.ar;
  j["cr_flagged"] = report.cr_flagged;
  j["pc_flagged"] = report.pc_flagged;
  j["cc_flagged"] = report.cc_flagged;
  out << j.dump(2) << "\n";
}

std::string format_acquisition_table(const AcquisitionReport& report, const std::string& label) {
  auto cell = [](double v, bool flagged) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f%s", v, flagged ? "*" : " ");
    return std::string(buf);
  };
  std::string out = "model            CR      PC      CC      AR\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %-7s %-7s %-7s %-7.2f\n", label.c_str(),
                cell(report.cr, report.cr_flagged).c_str(),
                cell(report.pc, report.pc_flagged).c_str(),
                cell(report.cc, report.cc_flagged).c_str(), report.ar);
  return out + buf;
}

}  // namespace imag
