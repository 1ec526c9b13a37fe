#include "mft/metrics.hpp"

#include <cmath>
#include <random>

#include "mft/error.hpp"

namespace mft::metrics {

namespace {

void check_pair(std::span<const int> a, std::span<const int> b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": length mismatch");
  }
  if (a.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": empty input");
}

double safe_ratio(double num, double den, bool& degenerate) {
  if (den == 0.0) {
    degenerate = true;
    return 0.0;
  }
  return num / den;
}

}  // namespace

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> gold) {
  check_pair(preds, gold, "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] | gold[i]) & ~1) {
      throw Error(ErrorCode::kInvalidArgument, "confusion: labels must be 0 or 1 (index " + std::to_string(i) + ")");
    }
    const bool p = preds[i] != 0;
    const bool g = gold[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

PrfScores binary_prf(const ConfusionCounts& c) {
  PrfScores s;
  const auto tp = static_cast<double>(c.tp);
  s.precision = safe_ratio(tp, tp + static_cast<double>(c.fp), s.degenerate);
  s.recall = safe_ratio(tp, tp + static_cast<double>(c.fn), s.degenerate);
  // 2tp / (2tp + fp + fn): equal count ratios give bit-equal scores.
  s.f1 = safe_ratio(2.0 * tp, 2.0 * tp + static_cast<double>(c.fp + c.fn), s.degenerate);
  if (c.tp == 0) s.degenerate = true;
  return s;
}

double f1_weighted(const ConfusionCounts& c) {
  const ConfusionCounts swapped{c.tn, c.fn, c.fp, c.tp};
  const double pos_support = static_cast<double>(c.tp + c.fn);
  const double neg_support = static_cast<double>(c.tn + c.fp);
  const double total = pos_support + neg_support;
  if (total == 0.0) return 0.0;
  return (pos_support * binary_prf(c).f1 + neg_support * binary_prf(swapped).f1) / total;
}

double f1_weighted(std::span<const int> preds, std::span<const int> gold) {
  return f1_weighted(confusion(preds, gold));
}

double accuracy(std::span<const int> preds, std::span<const int> gold) {
  const auto c = confusion(preds, gold);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double cohens_kappa(std::span<const int> a1, std::span<const int> a2) {
  const auto c = confusion(a1, a2);
  const double n = static_cast<double>(c.total());
  const double p_o = static_cast<double>(c.tp + c.tn) / n;
  const double a1_pos = static_cast<double>(c.tp + c.fp) / n;
  const double a2_pos = static_cast<double>(c.tp + c.fn) / n;
  const double p_e = a1_pos * a2_pos + (1.0 - a1_pos) * (1.0 - a2_pos);
  if (p_e == 1.0) return 1.0;  // both annotators constant and identical
  return (p_o - p_e) / (1.0 - p_e);
}

double binary_precision_metric(std::span<const int> preds, std::span<const int> gold) {
  return binary_prf(confusion(preds, gold)).precision;
}
double binary_recall_metric(std::span<const int> preds, std::span<const int> gold) {
  return binary_prf(confusion(preds, gold)).recall;
}
double binary_f1_metric(std::span<const int> preds, std::span<const int> gold) {
  return binary_prf(confusion(preds, gold)).f1;
}

namespace {

double resample_metric(std::span<const int> preds, std::span<const int> gold,
                       const MetricFn& metric, std::uint64_t seed, std::uint64_t r,
                       std::vector<int>& p_buf, std::vector<int>& g_buf) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, preds.size() - 1);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto j = pick(rng);
    p_buf[i] = preds[j];
    g_buf[i] = gold[j];
  }
  return metric(p_buf, g_buf);
}

BootstrapEstimate summarize(const std::vector<double>& values) {
  BootstrapEstimate est;
  est.n_resamples = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  est.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - est.mean) * (v - est.mean);
  est.std = std::sqrt(sq / static_cast<double>(values.size()));
  return est;
}

void check_bootstrap(std::span<const int> preds, std::span<const int> gold, std::size_t n) {
  check_pair(preds, gold, "bootstrap");
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "bootstrap: n_resamples must be >= 1");
}

}  // namespace

BootstrapEstimate bootstrap_serial(std::span<const int> preds, std::span<const int> gold,
                                   const MetricFn& metric, std::size_t n_resamples,
                                   std::uint64_t seed) {
  check_bootstrap(preds, gold, n_resamples);
  std::vector<double> values(n_resamples);
  std::vector<int> p_buf(preds.size()), g_buf(preds.size());
  for (std::size_t r = 0; r < n_resamples; ++r) {
    values[r] = resample_metric(preds, gold, metric, seed, r, p_buf, g_buf);
  }
  return summarize(values);
}

BootstrapEstimate bootstrap(std::span<const int> preds, std::span<const int> gold,
                            const MetricFn& metric, std::size_t n_resamples, std::uint64_t seed) {
  check_bootstrap(preds, gold, n_resamples);
  std::vector<double> values(n_resamples);
  const auto n = static_cast<std::int64_t>(n_resamples);
#pragma omp parallel
  {
    std::vector<int> p_buf(preds.size()), g_buf(preds.size());
#pragma omp for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
      values[static_cast<std::size_t>(r)] =
          resample_metric(preds, gold, metric, seed, static_cast<std::uint64_t>(r), p_buf, g_buf);
    }
  }
  return summarize(values);
}

FoundationReport evaluate_foundation(Foundation f, std::span<const int> preds,
                                     std::span<const int> gold, std::size_t n_resamples,
                                     std::uint64_t seed) {
  FoundationReport rep;
  rep.foundation = f;
  rep.counts = confusion(preds, gold);
  rep.n_instances = preds.size();
  const auto prf = binary_prf(rep.counts);
  rep.degenerate = prf.degenerate;
  rep.precision_binary.point = prf.precision;
  rep.recall_binary.point = prf.recall;
  rep.f1_binary.point = prf.f1;
  rep.f1_weighted.point = f1_weighted(rep.counts);
  if (n_resamples > 0) {
    rep.precision_binary.boot = bootstrap(preds, gold, binary_precision_metric, n_resamples, seed);
    rep.recall_binary.boot = bootstrap(preds, gold, binary_recall_metric, n_resamples, seed);
    rep.f1_binary.boot = bootstrap(preds, gold, binary_f1_metric, n_resamples, seed);
    rep.f1_weighted.boot = bootstrap(
        preds, gold, [](std::span<const int> p, std::span<const int> g) { return f1_weighted(p, g); },
        n_resamples, seed);
  }
  return rep;
}

namespace {

nlohmann::json value_json(const MetricValue& v) {
  nlohmann::json j{{"point", v.point}};
  if (v.boot) {
    j["boot_mean"] = v.boot->mean;
    j["boot_std"] = v.boot->std;
    j["n_resamples"] = v.boot->n_resamples;
  }
  return j;
}

}  // namespace

nlohmann::json to_json(const MetricReport& report) {
  nlohmann::json per = nlohmann::json::object();
  constexpr std::array<const char*, 4> kNames{"precision_binary", "recall_binary", "f1_binary",
                                              "f1_weighted"};
  std::array<MetricValue, 4> avg{};
  bool have_boot = !report.foundations.empty();
  for (const auto& fr : report.foundations) {
    const std::array<const MetricValue*, 4> vals{&fr.precision_binary, &fr.recall_binary,
                                                 &fr.f1_binary, &fr.f1_weighted};
    nlohmann::json j;
    for (std::size_t k = 0; k < 4; ++k) {
      j[kNames[k]] = value_json(*vals[k]);
      avg[k].point += vals[k]->point;
      if (vals[k]->boot) {
        if (!avg[k].boot) avg[k].boot = BootstrapEstimate{0.0, 0.0, vals[k]->boot->n_resamples};
        avg[k].boot->mean += vals[k]->boot->mean;
        avg[k].boot->std += vals[k]->boot->std;
      } else {
        have_boot = false;
      }
    }
    j["n_instances"] = fr.n_instances;
    j["confusion"] = {{"tp", fr.counts.tp}, {"fp", fr.counts.fp}, {"fn", fr.counts.fn}, {"tn", fr.counts.tn}};
    j["degenerate"] = fr.degenerate;
    per[std::string(to_string(fr.foundation))] = std::move(j);
  }
  nlohmann::json out{{"foundations", per}};
  if (!report.foundations.empty()) {
    const auto n = static_cast<double>(report.foundations.size());
    nlohmann::json a;
    for (std::size_t k = 0; k < 4; ++k) {
      avg[k].point /= n;
      if (have_boot && avg[k].boot) {
        avg[k].boot->mean /= n;
        avg[k].boot->std /= n;
      } else {
        avg[k].boot.reset();
      }
      a[kNames[k]] = value_json(avg[k]);
    }
    out["average"] = std::move(a);
  }
  return out;
}

}  // namespace mft::metrics
