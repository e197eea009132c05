// Copyright 2026 The Nahr Authors
// SPDX-License-Identifier: Apache-2.0

#include "nahr/evaluation.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json_io.hpp"
#include "nahr/error.hpp"
#include "nahr/unicode.hpp"
#include "rng.hpp"

namespace nahr {
namespace {

template <class A, class B>
void require_same_length(const A& a, const B& b, std::size_t min_len, std::string_view what) {
  if (a.size() != b.size()) {
    throw ValidationError(
        fmt::format("{}: predictions ({}) and golds ({}) differ in length", what, a.size(), b.size()));
  }
  if (a.size() < min_len) {
    throw ValidationError(fmt::format("{}: need at least {} samples, got {}", what, min_len, a.size()));
  }
}

using Tokens = std::vector<std::string_view>;
using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts ngram_counts(const Tokens& toks, std::size_t n) {
  NgramCounts out;
  if (toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++out[std::vector<std::string_view>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                        toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

std::size_t clipped_overlap(const NgramCounts& pred, const NgramCounts& ref) {
  std::size_t m = 0;
  for (const auto& [g, c] : pred) {
    const auto it = ref.find(g);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

std::size_t total(const NgramCounts& c) {
  std::size_t t = 0;
  for (const auto& [g, n] : c) t += n;
  return t;
}

double f_measure(double overlap, double pred_total, double ref_total) {
  if (overlap <= 0.0 || pred_total <= 0.0 || ref_total <= 0.0) return 0.0;
  const double p = overlap / pred_total, r = overlap / ref_total;
  return 2.0 * p * r / (p + r);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double token_f1(const Tokens& pred, const Tokens& gold) {
  if (pred.empty() || gold.empty()) return pred.empty() && gold.empty() ? 1.0 : 0.0;
  std::unordered_map<std::string_view, long> counts;
  for (auto t : gold) ++counts[t];
  std::size_t common = 0;
  for (auto t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return f_measure(static_cast<double>(common), static_cast<double>(pred.size()),
                   static_cast<double>(gold.size()));
}

}  // namespace

std::string_view to_string(MetricName name) noexcept {
  switch (name) {
    case MetricName::pearson: return "pearson";
    case MetricName::jaccard: return "jaccard";
    case MetricName::f1_macro: return "f1_macro";
    case MetricName::accuracy: return "accuracy";
    case MetricName::rouge1: return "rouge1";
    case MetricName::rouge2: return "rouge2";
    case MetricName::rougeL: return "rougeL";
    case MetricName::bleu: return "bleu";
    case MetricName::em: return "em";
    case MetricName::qa_f1: return "qa_f1";
    case MetricName::alue_avg: return "alue_avg";
  }
  return "unknown";
}

MetricValue pearson(std::span<const double> preds, std::span<const double> golds) {
  require_same_length(preds, golds, 2, "pearson");
  const double n = static_cast<double>(preds.size());
  const double mx = std::accumulate(preds.begin(), preds.end(), 0.0) / n;
  const double my = std::accumulate(golds.begin(), golds.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double dx = preds[i] - mx, dy = golds[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  MetricValue v{MetricName::pearson, 0.0, preds.size(), false};
  if (sxx == 0.0 || syy == 0.0) {
    v.degenerate = true;
    return v;
  }
  v.value = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return v;
}

MetricValue jaccard_multilabel(std::span<const LabelSet> preds, std::span<const LabelSet> golds) {
  require_same_length(preds, golds, 0, "jaccard");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    const auto& g = golds[i];
    if (p.empty() && g.empty()) {
      sum += 1.0;
      continue;
    }
    std::size_t inter = 0;
    for (const auto& l : p) inter += g.count(l);
    sum += static_cast<double>(inter) / static_cast<double>(p.size() + g.size() - inter);
  }
  return MetricValue{MetricName::jaccard, preds.empty() ? 0.0 : sum / static_cast<double>(preds.size()),
                     preds.size(), false};
}

MetricValue accuracy(std::span<const std::string> preds, std::span<const std::string> golds) {
  require_same_length(preds, golds, 1, "accuracy");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == golds[i];
  return MetricValue{MetricName::accuracy, static_cast<double>(hit) / static_cast<double>(preds.size()),
                     preds.size(), false};
}

MetricValue f1_score(std::span<const std::string> preds, std::span<const std::string> golds,
                     F1Average average) {
  require_same_length(preds, golds, 1, "f1");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
  };
  std::map<std::string_view, Counts> classes;
  for (const auto& g : golds) ++classes[g].support;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) {
      ++classes[golds[i]].tp;
    } else {
      ++classes[golds[i]].fn;
      if (auto it = classes.find(preds[i]); it != classes.end()) ++it->second.fp;
    }
  }
  const auto f1_of = [](std::size_t tp, std::size_t fp, std::size_t fn) {
    return f_measure(static_cast<double>(tp), static_cast<double>(tp + fp), static_cast<double>(tp + fn));
  };
  double value = 0.0;
  if (average == F1Average::micro) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [c, k] : classes) {
      tp += k.tp;
      fp += k.fp;
      fn += k.fn;
    }
    value = f1_of(tp, fp, fn);
  } else {
    double sum = 0.0, weight = 0.0;
    for (const auto& [c, k] : classes) {
      const double w = average == F1Average::weighted ? static_cast<double>(k.support) : 1.0;
      sum += w * f1_of(k.tp, k.fp, k.fn);
      weight += w;
    }
    value = sum / weight;
  }
  return MetricValue{MetricName::f1_macro, value, preds.size(), false};
}

QaScore qa_em_f1(std::string_view pred, std::span<const std::string> golds) {
  if (golds.empty()) throw ValidationError("qa_em_f1 needs at least one gold answer");
  const std::string np = unicode::normalize_answer(pred);
  const auto pt = unicode::split_words(np);
  QaScore best;
  for (const auto& g : golds) {
    const std::string ng = unicode::normalize_answer(g);
    if (ng == np) best.em = 1.0;
    best.f1 = std::max(best.f1, token_f1(pt, unicode::split_words(ng)));
  }
  return best;
}

MetricValue rouge(std::string_view pred, std::string_view ref, RougeVariant variant) {
  const MetricName name = variant == RougeVariant::rouge1   ? MetricName::rouge1
                          : variant == RougeVariant::rouge2 ? MetricName::rouge2
                                                            : MetricName::rougeL;
  const auto pt = unicode::split_words(pred);
  const auto rt = unicode::split_words(ref);
  MetricValue v{name, 0.0, 1, false};
  if (pt.empty() || rt.empty()) {
    v.value = pt.empty() && rt.empty() ? 1.0 : 0.0;
    return v;
  }
  if (variant == RougeVariant::rougeL) {
    v.value = f_measure(static_cast<double>(lcs_length(pt, rt)), static_cast<double>(pt.size()),
                        static_cast<double>(rt.size()));
    return v;
  }
  const std::size_t n = variant == RougeVariant::rouge1 ? 1 : 2;
  const auto pc = ngram_counts(pt, n);
  const auto rc = ngram_counts(rt, n);
  if (pc.empty() && rc.empty()) {
    // Both texts shorter than n: fall back to identity.
    v.value = pt == rt ? 1.0 : 0.0;
    return v;
  }
  v.value = f_measure(static_cast<double>(clipped_overlap(pc, rc)), static_cast<double>(total(pc)),
                      static_cast<double>(total(rc)));
  return v;
}

MetricValue bleu(std::span<const std::string> preds, std::span<const std::string> refs) {
  require_same_length(preds, refs, 1, "bleu");
  std::array<std::size_t, 4> matches{}, totals{};
  std::size_t pred_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto pt = unicode::split_words(preds[i]);
    const auto rt = unicode::split_words(refs[i]);
    pred_len += pt.size();
    ref_len += rt.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto pc = ngram_counts(pt, n);
      matches[n - 1] += clipped_overlap(pc, ngram_counts(rt, n));
      totals[n - 1] += total(pc);
    }
  }
  MetricValue v{MetricName::bleu, 0.0, preds.size(), false};
  if (pred_len == 0 || matches[0] == 0) return v;
  double log_sum = std::log(static_cast<double>(matches[0]) / static_cast<double>(totals[0]));
  for (std::size_t n = 1; n < 4; ++n) {
    log_sum += std::log((static_cast<double>(matches[n]) + 1.0) / (static_cast<double>(totals[n]) + 1.0));
  }
  const double bp = pred_len > ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(pred_len));
  v.value = bp * std::exp(log_sum / 4.0);
  return v;
}

MetricValue alue_average(const std::map<std::string, double, std::less<>>& scores) {
  std::vector<std::string> missing, unknown;
  for (auto task : kAlueTasks) {
    if (!scores.contains(task)) missing.emplace_back(task);
  }
  for (const auto& [k, v] : scores) {
    if (std::find(kAlueTasks.begin(), kAlueTasks.end(), k) == kAlueTasks.end()) unknown.push_back(k);
  }
  if (!missing.empty() || !unknown.empty()) {
    std::string msg = "ALUE average needs exactly the 8 task scores";
    if (!missing.empty()) msg += fmt::format("; missing: {}", fmt::join(missing, ", "));
    if (!unknown.empty()) msg += fmt::format("; unknown: {}", fmt::join(unknown, ", "));
    throw ValidationError(msg);
  }
  double sum = 0.0;
  for (auto task : kAlueTasks) sum += scores.find(task)->second;
  return MetricValue{MetricName::alue_avg, sum / static_cast<double>(kAlueTasks.size()),
                     kAlueTasks.size(), false};
}

std::string render_one_decimal(double value) {
  const double r = std::floor(value * 10.0 + 0.5) / 10.0;
  return fmt::format("{:.1f}", r);
}

std::string render_alue_table(std::span<const AlueRow> rows) {
  std::ostringstream out;
  out << fmt::format("{:<14}", "Model");
  for (auto t : kAlueTasks) out << fmt::format(" {:>6}", t);
  out << fmt::format(" {:>6}\n", "Avg.");
  for (const auto& row : rows) {
    const auto avg = alue_average(row.scores);
    out << fmt::format("{:<14}", row.model);
    for (auto t : kAlueTasks) out << fmt::format(" {:>6}", render_one_decimal(row.scores.find(t)->second));
    out << fmt::format(" {:>6}\n", render_one_decimal(avg.value));
  }
  return out.str();
}

// -- few-shot ------------------------------------------------------------------------------------

FewShotFold sample_fewshot(std::span<const LabeledExample> dataset, std::uint32_t size,
                           std::uint64_t seed, std::span<const std::string> declared_classes) {
  if (std::find(kFewShotSizes.begin(), kFewShotSizes.end(), size) == kFewShotSizes.end()) {
    throw ValidationError(fmt::format("few-shot size {} is not one of 8, 16, 32, 64, 128, 256", size));
  }
  if (size > dataset.size()) {
    throw ValidationError(fmt::format("few-shot size {} exceeds dataset size {}", size, dataset.size()));
  }
  std::map<std::string_view, std::vector<std::size_t>> by_class;
  {
    std::set<std::string_view> ids;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (!ids.insert(dataset[i].id).second) {
        throw ValidationError(fmt::format("duplicate example id `{}`", dataset[i].id));
      }
      by_class[dataset[i].label].push_back(i);
    }
  }
  for (const auto& c : declared_classes) {
    if (!by_class.contains(c)) throw ValidationError(fmt::format("class `{}` has no examples", c));
  }

  detail::SeededRng rng(seed, 0x66657773686f74ULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < size; ++i) {
    std::swap(order[i], order[i + rng.below(order.size() - i)]);
  }

  FewShotFold fold;
  fold.requested_size = size;
  fold.seed = seed;
  std::set<std::string_view> covered;
  for (std::size_t i = 0; i < size; ++i) {
    fold.example_ids.push_back(dataset[order[i]].id);
    covered.insert(dataset[order[i]].label);
  }
  for (const auto& [label, members] : by_class) {
    if (covered.contains(label)) continue;
    const auto& pick = dataset[members[rng.below(members.size())]];
    fold.example_ids.push_back(pick.id);
    fold.augmented.push_back(pick.id);
  }
  return fold;
}

std::vector<FewShotFold> sample_folds(std::span<const LabeledExample> dataset, std::uint32_t size,
                                      std::uint64_t seed, std::uint32_t folds) {
  std::vector<FewShotFold> out;
  for (std::uint32_t f = 0; f < folds; ++f) out.push_back(sample_fewshot(dataset, size, seed + f));
  return out;
}

RunSummary summarize_runs(std::span<const double> scores, StdKind kind) {
  if (scores.empty()) throw ValidationError("summarize_runs needs at least one score");
  const double n = static_cast<double>(scores.size());
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  double var = 0.0;
  if (kind == StdKind::population) {
    var = ss / n;
  } else if (scores.size() > 1) {
    var = ss / (n - 1.0);
  }
  return RunSummary{mean, std::sqrt(var), scores.size()};
}

std::string format_summary(const RunSummary& summary) {
  return render_one_decimal(summary.mean) + "±" + render_one_decimal(summary.std);
}

// -- files ---------------------------------------------------------------------------------------

namespace {

struct PredictionRow {
  nlohmann::json prediction;
  std::vector<nlohmann::json> golds;
};

std::vector<PredictionRow> read_prediction_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto obj = json_io::parse(line, fmt::format("{}:{}", path.string(), line_no));
    if (!obj.contains("prediction")) {
      throw ValidationError(fmt::format("{}:{}: missing `prediction`", path.string(), line_no));
    }
    PredictionRow row;
    row.prediction = obj["prediction"];
    if (obj.contains("golds")) {
      for (const auto& g : obj["golds"]) row.golds.push_back(g);
    } else if (obj.contains("gold")) {
      row.golds.push_back(obj["gold"]);
    } else {
      throw ValidationError(fmt::format("{}:{}: missing `gold` or `golds`", path.string(), line_no));
    }
    if (row.golds.empty()) {
      throw ValidationError(fmt::format("{}:{}: empty `golds`", path.string(), line_no));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string as_label(const nlohmann::json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

LabelSet as_set(const nlohmann::json& j) {
  LabelSet s;
  if (j.is_array()) {
    for (const auto& e : j) s.insert(as_label(e));
  } else if (!j.is_null()) {
    s.insert(as_label(j));
  }
  return s;
}

nlohmann::json metric_json(const MetricValue& v) {
  nlohmann::json j = {{"name", to_string(v.name)}, {"value", v.value}, {"support", v.support}};
  if (v.degenerate) j["degenerate"] = true;
  return j;
}

}  // namespace

std::string evaluate_predictions_file(std::string_view task, const std::filesystem::path& jsonl) {
  const auto rows = read_prediction_rows(jsonl);
  nlohmann::json report = {{"task", task}, {"file", jsonl.string()}, {"n", rows.size()}};
  nlohmann::json metrics = nlohmann::json::array();

  const auto labels = [&] {
    std::vector<std::string> p, g;
    for (const auto& r : rows) {
      p.push_back(as_label(r.prediction));
      g.push_back(as_label(r.golds.front()));
    }
    return std::pair{p, g};
  };
  const auto texts = labels;

  if (task == "SVREG" || task == "pearson") {
    std::vector<double> p, g;
    for (const auto& r : rows) {
      p.push_back(r.prediction.get<double>());
      g.push_back(r.golds.front().get<double>());
    }
    metrics.push_back(metric_json(pearson(p, g)));
  } else if (task == "SEC" || task == "jaccard") {
    std::vector<LabelSet> p, g;
    for (const auto& r : rows) {
      p.push_back(as_set(r.prediction));
      g.push_back(as_set(r.golds.front()));
    }
    metrics.push_back(metric_json(jaccard_multilabel(p, g)));
  } else if (task == "XNLI" || task == "accuracy") {
    const auto [p, g] = labels();
    metrics.push_back(metric_json(accuracy(p, g)));
  } else if (task == "MQ2Q" || task == "MDD" || task == "FID" || task == "OOLD" || task == "OHSD" ||
             task == "f1" || task == "f1_macro") {
    const auto [p, g] = labels();
    metrics.push_back(metric_json(f1_score(p, g)));
    metrics.push_back(metric_json(accuracy(p, g)));
  } else if (task == "TS" || task == "rouge") {
    const auto [p, g] = texts();
    for (auto variant : {RougeVariant::rouge1, RougeVariant::rouge2, RougeVariant::rougeL}) {
      double sum = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) sum += rouge(p[i], g[i], variant).value;
      MetricValue v = rouge(std::string_view{}, std::string_view{}, variant);
      v.value = p.empty() ? 0.0 : sum / static_cast<double>(p.size());
      v.support = p.size();
      metrics.push_back(metric_json(v));
    }
  } else if (task == "QG" || task == "bleu") {
    const auto [p, g] = texts();
    metrics.push_back(metric_json(bleu(p, g)));
  } else if (task == "QA" || task == "qa") {
    double em = 0.0, f1 = 0.0;
    for (const auto& r : rows) {
      std::vector<std::string> golds;
      for (const auto& g : r.golds) golds.push_back(as_label(g));
      const auto s = qa_em_f1(as_label(r.prediction), golds);
      em += s.em;
      f1 += s.f1;
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    metrics.push_back(metric_json(MetricValue{MetricName::em, em / n, rows.size(), false}));
    metrics.push_back(metric_json(MetricValue{MetricName::qa_f1, f1 / n, rows.size(), false}));
  } else {
    throw ValidationError(fmt::format("unknown evaluation task `{}`", task));
  }
  report["metrics"] = metrics;
  return report.dump(2);
}

std::pair<std::string, std::string> alue_report_from_file(const std::filesystem::path& path) {
  auto j = json_io::parse(json_io::read_file(path), path.string());
  if (!j.is_array()) j = nlohmann::json::array({j});
  std::vector<AlueRow> rows;
  nlohmann::json out = nlohmann::json::array();
  for (const auto& entry : j) {
    AlueRow row;
    row.model = entry.value("model", std::string("model"));
    for (const auto& [k, v] : entry.at("scores").items()) row.scores[k] = v.get<double>();
    const auto avg = alue_average(row.scores);
    out.push_back({{"model", row.model},
                   {"scores", entry.at("scores")},
                   {"avg", avg.value},
                   {"avg_rendered", render_one_decimal(avg.value)}});
    rows.push_back(std::move(row));
  }
  return {render_alue_table(rows), out.dump(2)};
}

std::vector<LabeledExample> read_labeled_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto obj = json_io::parse(line, fmt::format("{}:{}", path.string(), line_no));
    if (!obj.contains("label")) {
      throw ValidationError(fmt::format("{}:{}: missing `label`", path.string(), line_no));
    }
    LabeledExample ex;
    ex.id = obj.contains("id") ? as_label(obj["id"]) : std::to_string(line_no);
    ex.label = as_label(obj["label"]);
    out.push_back(std::move(ex));
  }
  return out;
}

std::string folds_to_json(std::span<const FewShotFold> folds) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : folds) out.push_back(f);
  return out.dump(2);
}

}  // namespace nahr
