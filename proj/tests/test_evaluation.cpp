#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "dynoscan/errors.hpp"
#include "dynoscan/evaluation.hpp"
#include "oracles/oracles.hpp"

using namespace dynoscan;

namespace {

std::vector<std::uint32_t> range_idx(std::uint32_t lo, std::uint32_t hi)
{
  std::vector<std::uint32_t> v;
  for (auto i = lo; i < hi; ++i)
    v.push_back(i);
  return v;
}

}  // namespace

TEST_CASE("hand-counted frame: tp 8, fp 2, fn 2")
{
  const auto gt = range_idx(0, 10);
  auto pred = range_idx(2, 10);
  pred.push_back(20);
  pred.push_back(21);
  const ConfusionCounts c = score_frame(pred, gt);
  CHECK(c == ConfusionCounts{8, 2, 2});
  const Metrics m = metrics(c);
  CHECK(m.precision == doctest::Approx(0.8));
  CHECK(m.recall == doctest::Approx(0.8));
  CHECK(m.iou == doctest::Approx(2.0 / 3.0));
  CHECK(m.f1 == doctest::Approx(0.8));
  CHECK_FALSE(m.zero_denominator);
}

TEST_CASE("empty and degenerate frames default to zero with flags")
{
  Metrics m = metrics({});
  CHECK(m.empty_frame);
  CHECK(m.zero_denominator);
  CHECK(m.precision == 0.0);
  m = metrics({0, 3, 0});
  CHECK_FALSE(m.empty_frame);
  CHECK(m.precision == 0.0);
  CHECK(m.zero_denominator);  // recall has no positives
}

TEST_CASE("score_frame equals a set-based count on random labels")
{
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<std::uint32_t> idx(0, 300);
  for (int trial = 0; trial < 100; ++trial)
  {
    DynamicLabel a{0, {}}, b{0, {}};
    for (int i = 0; i < 80; ++i)
    {
      a.idx.push_back(idx(rng));
      b.idx.push_back(idx(rng));
    }
    normalize(a);
    normalize(b);
    std::vector<std::uint32_t> inter;
    std::set_intersection(a.idx.begin(), a.idx.end(), b.idx.begin(), b.idx.end(), std::back_inserter(inter));
    const auto c = score_frame(a.idx, b.idx);
    CHECK(c.tp == inter.size());
    CHECK(c.fp == a.idx.size() - inter.size());
    CHECK(c.fn == b.idx.size() - inter.size());
  }
}

TEST_CASE("F1 = 2 IoU / (1 + IoU) whenever precision and recall are positive")
{
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> n(0, 50);
  for (int trial = 0; trial < 1000; ++trial)
  {
    const Metrics m = metrics({n(rng) + 1, n(rng), n(rng)});
    REQUIRE(m.precision > 0.0);
    CHECK(std::abs(m.f1 - 2.0 * m.iou / (1.0 + m.iou)) <= 1e-12);
  }
}

TEST_CASE("frames pair by nearest timestamp within tolerance")
{
  std::vector<DynamicLabel> pred{{0.0, {1}}, {0.104, {2}}, {0.3, {3}}};
  std::vector<DynamicLabel> gt{{0.0, {1}}, {0.1, {2}}, {0.2, {4}}};
  const auto pairs = match_frames(pred, gt, 0.01);
  REQUIRE(pairs.size() == 4);
  CHECK(pairs[0].pred == 0u);
  CHECK(pairs[0].gt == 0u);
  CHECK(pairs[1].pred == 1u);
  CHECK(pairs[1].gt == 1u);
  CHECK_FALSE(pairs[2].pred);
  CHECK(pairs[2].gt == 2u);
  CHECK(pairs[3].pred == 2u);
  CHECK_FALSE(pairs[3].gt);

  const SequenceReport r = evaluate_sequence(pred, gt);
  CHECK(r.matched_frames == 2);
  CHECK(r.unmatched_gt == 1);
  CHECK(r.unmatched_pred == 1);
  CHECK(r.totals == ConfusionCounts{2, 1, 1});
  CHECK(r.micro.precision == doctest::Approx(2.0 / 3.0));
  // Macro averages the three non-empty rows over matched and unmatched frames.
  CHECK(r.macro.precision == doctest::Approx((1.0 + 1.0 + 0.0 + 0.0) / 4.0));
}

TEST_CASE("report JSON and series CSV carry the aggregates")
{
  std::vector<DynamicLabel> pred{{0.0, range_idx(2, 10)}, {0.1, {}}};
  pred[0].idx.push_back(20);
  pred[0].idx.push_back(21);
  std::vector<DynamicLabel> gt{{0.0, range_idx(0, 10)}, {0.1, {}}};
  const SequenceReport r = evaluate_sequence(pred, gt);
  const auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["micro"]["precision"].get<double>() == doctest::Approx(0.8));
  CHECK(j["macro"]["f1"].get<double>() == doctest::Approx(0.8));
  CHECK(j["totals"]["tp"].get<int>() == 8);
  CHECK(j["frames"]["matched"].get<int>() == 2);
  CHECK(j["averaging"].get<std::string>().find("micro") != std::string::npos);
  const std::string csv = series_csv(r);
  CHECK(csv.rfind("frame,t,precision,recall,iou,f1\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("wilcoxon exact p-value equals enumeration of all sign patterns")
{
  std::mt19937_64 rng(24);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial)
  {
    std::vector<double> a(12), b(12);
    for (int i = 0; i < 12; ++i)
    {
      a[static_cast<std::size_t>(i)] = g(rng) + 0.3 * (trial % 4);
      b[static_cast<std::size_t>(i)] = g(rng);
      // Some trials use rounded values to create ties and zero differences.
      if (trial % 3 == 0)
      {
        a[static_cast<std::size_t>(i)] = std::round(2 * a[static_cast<std::size_t>(i)]);
        b[static_cast<std::size_t>(i)] = std::round(2 * b[static_cast<std::size_t>(i)]);
      }
    }
    const auto o = oracle::signed_rank_enumeration(a, b);
    std::size_t nonzero = 0;
    for (int i = 0; i < 12; ++i)
      nonzero += a[static_cast<std::size_t>(i)] != b[static_cast<std::size_t>(i)];
    if (nonzero < 6)
      continue;
    const auto w = wilcoxon_signed_rank(a, b);
    CHECK(w.exact);
    CHECK(w.w_plus == o.w_plus);
    CHECK(std::abs(w.p_value - o.p_value) <= 1e-12);
    CHECK(w.w_plus + w.w_minus == doctest::Approx(w.n * (w.n + 1) / 2.0));
  }
}

TEST_CASE("wilcoxon edge cases")
{
  std::vector<double> a{1, 2, 3}, b{1, 2, 3};
  CHECK(wilcoxon_signed_rank(a, b).degenerate);
  std::vector<double> c{1, 2, 4};
  CHECK_THROWS_AS(wilcoxon_signed_rank(a, c), DomainError);
  std::vector<double> d{1, 2};
  CHECK_THROWS_AS(wilcoxon_signed_rank(a, d), DomainError);

  // All positive differences 1..8: W+ = 36, p = 2 / 256.
  std::vector<double> x(8), y(8, 0.0);
  for (int i = 0; i < 8; ++i)
    x[static_cast<std::size_t>(i)] = i + 1;
  const auto w = wilcoxon_signed_rank(x, y);
  CHECK(w.w_plus == 36.0);
  CHECK(w.statistic == 0.0);
  CHECK(w.p_value == doctest::Approx(2.0 / 256.0));
}

TEST_CASE("wilcoxon normal approximation for large samples")
{
  std::mt19937_64 rng(25);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(60), b(60);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    a[i] = g(rng) + 1.0;
    b[i] = g(rng);
  }
  const auto w = wilcoxon_signed_rank(a, b);
  CHECK_FALSE(w.exact);
  CHECK(w.z > 3.0);
  CHECK(w.p_value < 0.01);
  // Without ties: z from the textbook mean and variance.
  const double n = 60.0;
  const double z = (w.w_plus - n * (n + 1) / 4) / std::sqrt(n * (n + 1) * (2 * n + 1) / 24);
  CHECK(w.z == doctest::Approx(z));
}
