#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "edad/tensor.hpp"

namespace edad {

struct Prf1 {
  double precision = 0, recall = 0, f1 = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Zero conventions: P = 0 without predicted positives, R = 0 without true
/// positives, F1 = 0 when P + R = 0.
Prf1 prf1(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> labels);
double f1_score(double precision, double recall);

/// Mann-Whitney area with midrank ties. Labels must contain both classes.
double auc_roc(std::span<const real> scores, std::span<const std::uint8_t> labels);
/// Step-wise average precision over all distinct thresholds.
double auc_pr(std::span<const real> scores, std::span<const std::uint8_t> labels);

/// Continuous-label versions. A point with label w > 0 contributes w as
/// positive mass; only points with label exactly 0 count as negatives.
/// With 0/1 labels these coincide with the plain areas.
double soft_auc_roc(std::span<const real> scores, std::span<const real> labels);
double soft_auc_pr(std::span<const real> scores, std::span<const real> labels);

/// Labels softened by a linear ramp of width `buffer` outside each labeled
/// segment: 1 - k / (buffer + 1) at distance k <= buffer, max over segments.
std::vector<real> buffered_labels(std::span<const std::uint8_t> labels, std::size_t buffer);

struct VusResult {
  double pr = 0, roc = 0;
  std::size_t max_buffer = 0;
};

/// Areas averaged over buffer widths 0..max_buffer, skipping widths whose
/// ramps leave no zero-label point.
VusResult vus(std::span<const real> scores, std::span<const std::uint8_t> labels, std::size_t max_buffer);

struct EvalReport {
  Prf1 counts;
  double auc_pr = 0, auc_roc = 0, vus_pr = 0, vus_roc = 0;
  std::size_t max_buffer = 0;
};

EvalReport evaluate(std::span<const real> scores, std::span<const std::uint8_t> preds,
                    std::span<const std::uint8_t> labels, std::size_t max_buffer);

/// "key = value" lines.
void write_report(std::ostream& out, const EvalReport& r);
void write_report_csv_header(std::ostream& out);
void write_report_csv_row(std::ostream& out, const EvalReport& r);

}  // namespace edad
