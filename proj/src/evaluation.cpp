#include "dynoscan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "dynoscan/errors.hpp"

namespace dynoscan {

ConfusionCounts score_frame(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> gt)
{
  ConfusionCounts c;
  std::size_t i = 0, j = 0;
  while (i < pred.size() && j < gt.size())
  {
    if (pred[i] == gt[j])
    {
      ++c.tp;
      ++i;
      ++j;
    }
    else if (pred[i] < gt[j])
    {
      ++c.fp;
      ++i;
    }
    else
    {
      ++c.fn;
      ++j;
    }
  }
  c.fp += pred.size() - i;
  c.fn += gt.size() - j;
  return c;
}

Metrics metrics(const ConfusionCounts& c)
{
  Metrics m;
  const auto tp = static_cast<double>(c.tp);
  auto ratio = [&](double num, double den) {
    if (den > 0.0)
      return num / den;
    m.zero_denominator = true;
    return 0.0;
  };
  m.precision = ratio(tp, tp + static_cast<double>(c.fp));
  m.recall = ratio(tp, tp + static_cast<double>(c.fn));
  m.iou = ratio(tp, static_cast<double>(c.fn) + tp + static_cast<double>(c.fp));
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  m.empty_frame = c.tp == 0 && c.fp == 0 && c.fn == 0;
  return m;
}

std::vector<FramePair> match_frames(std::span<const DynamicLabel> pred, std::span<const DynamicLabel> gt,
                                    double max_dt)
{
  struct Candidate
  {
    double dt;
    std::size_t p;
    std::size_t g;
  };
  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < gt.size(); ++g)
  {
    auto lo = std::lower_bound(pred.begin(), pred.end(), gt[g].t - max_dt,
                               [](const DynamicLabel& l, double t) { return l.t < t; });
    for (auto it = lo; it != pred.end() && it->t <= gt[g].t + max_dt; ++it)
      candidates.push_back({std::abs(it->t - gt[g].t), static_cast<std::size_t>(it - pred.begin()), g});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.dt < b.dt; });

  std::vector<std::optional<std::size_t>> gt_to_pred(gt.size());
  std::vector<char> pred_used(pred.size(), 0);
  for (const auto& c : candidates)
  {
    if (pred_used[c.p] || gt_to_pred[c.g])
      continue;
    pred_used[c.p] = 1;
    gt_to_pred[c.g] = c.p;
  }

  std::vector<std::pair<double, FramePair>> rows;
  for (std::size_t g = 0; g < gt.size(); ++g)
    rows.push_back({gt[g].t, FramePair{gt_to_pred[g], g}});
  for (std::size_t p = 0; p < pred.size(); ++p)
    if (!pred_used[p])
      rows.push_back({pred[p].t, FramePair{p, std::nullopt}});
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<FramePair> out;
  out.reserve(rows.size());
  for (auto& r : rows)
    out.push_back(r.second);
  return out;
}

SequenceReport evaluate_sequence(std::span<const DynamicLabel> pred, std::span<const DynamicLabel> gt,
                                 double max_dt)
{
  SequenceReport report;
  report.gt_frames = gt.size();
  report.pred_frames = pred.size();

  const auto pairs = match_frames(pred, gt, max_dt);
  double sum_p = 0, sum_r = 0, sum_i = 0, sum_f = 0;
  std::size_t counted = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k)
  {
    const FramePair& fp = pairs[k];
    FrameRow row;
    row.frame = k;
    static const std::vector<std::uint32_t> none;
    const auto& p = fp.pred ? pred[*fp.pred].idx : none;
    const auto& g = fp.gt ? gt[*fp.gt].idx : none;
    row.t = fp.gt ? gt[*fp.gt].t : pred[*fp.pred].t;
    row.matched = fp.pred && fp.gt;
    row.counts = score_frame(p, g);
    row.metrics = metrics(row.counts);
    report.totals += row.counts;
    if (row.matched)
      ++report.matched_frames;
    else if (fp.gt)
      ++report.unmatched_gt;
    else
      ++report.unmatched_pred;
    if (!row.metrics.empty_frame)
    {
      sum_p += row.metrics.precision;
      sum_r += row.metrics.recall;
      sum_i += row.metrics.iou;
      sum_f += row.metrics.f1;
      ++counted;
    }
    report.rows.push_back(row);
  }
  report.micro = metrics(report.totals);
  if (counted > 0)
  {
    const auto n = static_cast<double>(counted);
    report.macro.precision = sum_p / n;
    report.macro.recall = sum_r / n;
    report.macro.iou = sum_i / n;
    report.macro.f1 = sum_f / n;
  }
  else
  {
    report.macro.empty_frame = true;
    report.macro.zero_denominator = true;
  }
  return report;
}

namespace {

nlohmann::ordered_json metrics_json(const Metrics& m)
{
  nlohmann::ordered_json j;
  j["precision"] = m.precision;
  j["iou"] = m.iou;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["zero_denominator"] = m.zero_denominator;
  return j;
}

}  // namespace

std::string report_json(const SequenceReport& r)
{
  nlohmann::ordered_json j;
  j["averaging"] = "micro (summed counts); macro = mean over non-empty frames";
  j["micro"] = metrics_json(r.micro);
  j["macro"] = metrics_json(r.macro);
  j["totals"] = {{"tp", r.totals.tp}, {"fp", r.totals.fp}, {"fn", r.totals.fn}};
  j["frames"] = {{"gt", r.gt_frames},
                 {"pred", r.pred_frames},
                 {"matched", r.matched_frames},
                 {"unmatched_gt", r.unmatched_gt},
                 {"unmatched_pred", r.unmatched_pred}};
  return j.dump(2) + "\n";
}

std::string series_csv(const SequenceReport& r)
{
  std::ostringstream out;
  out << "frame,t,precision,recall,iou,f1\n";
  char buf[256];
  for (const auto& row : r.rows)
  {
    std::snprintf(buf, sizeof(buf), "%zu,%.9f,%.6f,%.6f,%.6f,%.6f\n", row.frame, row.t, row.metrics.precision,
                  row.metrics.recall, row.metrics.iou, row.metrics.f1);
    out << buf;
  }
  return out.str();
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b)
{
  if (a.size() != b.size())
    throw DomainError("wilcoxon: paired series differ in length");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != 0.0)
      diffs.push_back(a[i] - b[i]);

  WilcoxonResult res;
  res.n = diffs.size();
  if (diffs.empty())
  {
    res.degenerate = true;
    return res;
  }
  if (diffs.size() < 6)
    throw DomainError("wilcoxon: need at least 6 non-zero differences");

  // Mid-ranks of |d|, kept doubled so they stay integral.
  std::vector<std::size_t> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });
  std::vector<long> rank2(diffs.size());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < order.size();)
  {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]]))
      ++j;
    const long doubled = static_cast<long>(i + 1 + j + 1);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k)
      rank2[order[k]] = doubled;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  long plus2 = 0;
  long total2 = 0;
  for (std::size_t i = 0; i < diffs.size(); ++i)
  {
    total2 += rank2[i];
    if (diffs[i] > 0)
      plus2 += rank2[i];
  }
  res.w_plus = plus2 / 2.0;
  res.w_minus = (total2 - plus2) / 2.0;
  res.statistic = std::min(res.w_plus, res.w_minus);

  const auto n = static_cast<double>(res.n);
  if (res.n <= 25)
  {
    // Null distribution of the doubled positive-rank sum by subset-sum counting.
    std::vector<double> ways(static_cast<std::size_t>(total2) + 1, 0.0);
    ways[0] = 1.0;
    long reach = 0;
    for (long r : rank2)
    {
      for (long s = reach; s >= 0; --s)
        if (ways[static_cast<std::size_t>(s)] != 0.0)
          ways[static_cast<std::size_t>(s + r)] += ways[static_cast<std::size_t>(s)];
      reach += r;
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(res.n));
    double lower = 0.0, upper = 0.0;
    for (long s = 0; s <= total2; ++s)
    {
      if (s <= plus2)
        lower += ways[static_cast<std::size_t>(s)];
      if (s >= plus2)
        upper += ways[static_cast<std::size_t>(s)];
    }
    res.exact = true;
    res.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / patterns);
    return res;
  }

  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  res.z = var > 0.0 ? (res.w_plus - mean) / std::sqrt(var) : 0.0;
  res.p_value = std::min(1.0, std::erfc(std::abs(res.z) / std::sqrt(2.0)));
  return res;
}

}  // namespace dynoscan
