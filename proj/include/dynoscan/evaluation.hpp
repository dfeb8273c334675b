#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynoscan/segmentation.hpp"

namespace dynoscan {

struct ConfusionCounts
{
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o)
  {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics
{
  double precision = 0.0;
  double recall = 0.0;
  double iou = 0.0;
  double f1 = 0.0;
  bool empty_frame = false;        // tp = fp = fn = 0
  bool zero_denominator = false;   // at least one metric defaulted to 0
};

/// Point-level set comparison of two sorted unique index lists.
ConfusionCounts score_frame(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> gt);

Metrics metrics(const ConfusionCounts& counts);

struct FramePair
{
  std::optional<std::size_t> pred;
  std::optional<std::size_t> gt;
};

/// Greedy nearest-timestamp pairing within max_dt; unpaired frames appear with
/// one side empty. Output is ordered by timestamp.
std::vector<FramePair> match_frames(std::span<const DynamicLabel> pred, std::span<const DynamicLabel> gt,
                                    double max_dt);

struct FrameRow
{
  std::size_t frame = 0;  // row index in timestamp order
  double t = 0.0;
  bool matched = false;
  ConfusionCounts counts;
  Metrics metrics;
};

struct SequenceReport
{
  std::vector<FrameRow> rows;
  ConfusionCounts totals;
  Metrics micro;  // from summed counts (primary)
  Metrics macro;  // mean of per-frame metrics over non-empty frames
  std::size_t gt_frames = 0;
  std::size_t pred_frames = 0;
  std::size_t matched_frames = 0;
  std::size_t unmatched_gt = 0;
  std::size_t unmatched_pred = 0;
};

SequenceReport evaluate_sequence(std::span<const DynamicLabel> pred, std::span<const DynamicLabel> gt,
                                 double max_dt = 0.01);

/// JSON document with aggregates, frame statistics and averaging metadata.
std::string report_json(const SequenceReport& report);
/// `frame,t,precision,recall,iou,f1`
std::string series_csv(const SequenceReport& report);

struct WilcoxonResult
{
  std::size_t n = 0;  // non-zero differences
  double w_plus = 0.0;
  double w_minus = 0.0;
  double statistic = 0.0;  // min(w_plus, w_minus)
  double p_value = 1.0;    // two-sided
  double z = 0.0;          // normal approximation only
  bool exact = false;
  bool degenerate = false;  // every difference is zero
};

/// Two-sided signed-rank test on paired samples. Zero differences are dropped,
/// ties get mid-ranks; exact null distribution for n <= 25, tie-corrected normal
/// approximation above. Throws DomainError for unequal lengths or 1..5 non-zero differences.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

}  // namespace dynoscan
