#include "edad/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "edad/data.hpp"
#include "edad/errors.hpp"
#include "edad/parallel.hpp"

namespace edad {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DimensionError(std::string(what) + ": " + std::to_string(a) + " scores vs " + std::to_string(b) + " labels");
}

std::vector<real> as_soft(std::span<const std::uint8_t> labels) {
  std::vector<real> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw ContractError("labels must be 0 or 1");
    out[i] = labels[i];
  }
  return out;
}

// Indices sorted by descending score; stable so equal scores keep index order.
std::vector<std::size_t> descending(std::span<const real> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double f1_score(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

Prf1 prf1(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> labels) {
  require_same_length(preds.size(), labels.size(), "prf1");
  Prf1 r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] != 0, l = labels[i] != 0;
    r.tp += p && l;
    r.fp += p && !l;
    r.fn += !p && l;
    r.tn += !p && !l;
  }
  r.precision = r.tp + r.fp ? double(r.tp) / double(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn ? double(r.tp) / double(r.tp + r.fn) : 0.0;
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

double soft_auc_roc(std::span<const real> scores, std::span<const real> labels) {
  require_same_length(scores.size(), labels.size(), "auc_roc");
  const auto idx = descending(scores);
  double pos_total = 0, neg_total = 0;
  for (auto w : labels) {
    if (w < 0 || w > 1) throw ContractError("labels must lie in [0, 1]");
    pos_total += w;
    neg_total += w == 0;
  }
  if (pos_total <= 0 || neg_total == 0) throw MetricUndefined("ROC area needs both positive and negative points");
  // Walk tie groups from the top; positives in a group beat every negative
  // below it and half of the negatives tied with them.
  double area = 0, neg_above = 0;
  for (std::size_t lo = 0; lo < idx.size();) {
    std::size_t hi = lo;
    double pos = 0, neg = 0;
    for (; hi < idx.size() && scores[idx[hi]] == scores[idx[lo]]; ++hi) {
      pos += labels[idx[hi]];
      neg += labels[idx[hi]] == 0;
    }
    area += pos * (neg_total - neg_above - neg) + 0.5 * pos * neg;
    neg_above += neg;
    lo = hi;
  }
  return area / (pos_total * neg_total);
}

double soft_auc_pr(std::span<const real> scores, std::span<const real> labels) {
  require_same_length(scores.size(), labels.size(), "auc_pr");
  const auto idx = descending(scores);
  double pos_total = 0;
  for (auto w : labels) {
    if (w < 0 || w > 1) throw ContractError("labels must lie in [0, 1]");
    pos_total += w;
  }
  if (pos_total <= 0) throw MetricUndefined("PR area needs at least one positive point");
  double area = 0, tp = 0, fp = 0, prev_recall = 0;
  for (std::size_t lo = 0; lo < idx.size();) {
    std::size_t hi = lo;
    for (; hi < idx.size() && scores[idx[hi]] == scores[idx[lo]]; ++hi) {
      tp += labels[idx[hi]];
      fp += labels[idx[hi]] == 0;
    }
    const double recall = tp / pos_total;
    if (recall > prev_recall) area += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    lo = hi;
  }
  return std::clamp(area, 0.0, 1.0);
}

double auc_roc(std::span<const real> scores, std::span<const std::uint8_t> labels) {
  return soft_auc_roc(scores, as_soft(labels));
}

double auc_pr(std::span<const real> scores, std::span<const std::uint8_t> labels) {
  return soft_auc_pr(scores, as_soft(labels));
}

std::vector<real> buffered_labels(std::span<const std::uint8_t> labels, std::size_t buffer) {
  const std::size_t n = labels.size();
  // Distance to the nearest labeled point, via one forward and one backward pass.
  const std::size_t far = n + buffer + 1;
  std::vector<std::size_t> dist(n, far);
  for (std::size_t i = 0, last = far; i < n; ++i) {
    if (labels[i]) last = i;
    if (last != far) dist[i] = i - last;
  }
  for (std::size_t i = n, next = far; i-- > 0;) {
    if (labels[i]) next = i;
    if (next != far) dist[i] = std::min(dist[i], next - i);
  }
  std::vector<real> out(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (dist[i] <= buffer) out[i] = real{1} - static_cast<real>(dist[i]) / static_cast<real>(buffer + 1);
  return out;
}

VusResult vus(std::span<const real> scores, std::span<const std::uint8_t> labels, std::size_t max_buffer) {
  require_same_length(scores.size(), labels.size(), "vus");
  // Wide ramps can cover every point and leave no negatives; such widths
  // are left out of the average. Width 0 must be defined.
  std::vector<double> pr(max_buffer + 1), roc(max_buffer + 1);
  std::vector<char> defined(max_buffer + 1, 1);
  parallel_for(max_buffer + 1, worker_count(), [&](std::size_t l) {
    if (l == 0) {
      pr[l] = auc_pr(scores, labels);
      roc[l] = auc_roc(scores, labels);
      return;
    }
    const auto soft = buffered_labels(labels, l);
    if (std::find(soft.begin(), soft.end(), real{0}) == soft.end()) {
      defined[l] = 0;
      return;
    }
    pr[l] = soft_auc_pr(scores, soft);
    roc[l] = soft_auc_roc(scores, soft);
  });
  VusResult r{0, 0, max_buffer};
  double widths = 0;
  for (std::size_t l = 0; l <= max_buffer; ++l) {
    if (!defined[l]) continue;
    r.pr += pr[l];
    r.roc += roc[l];
    ++widths;
  }
  r.pr /= widths;
  r.roc /= widths;
  return r;
}

EvalReport evaluate(std::span<const real> scores, std::span<const std::uint8_t> preds,
                    std::span<const std::uint8_t> labels, std::size_t max_buffer) {
  require_same_length(scores.size(), labels.size(), "evaluate");
  EvalReport r;
  r.counts = prf1(preds, labels);
  r.auc_pr = auc_pr(scores, labels);
  r.auc_roc = auc_roc(scores, labels);
  const auto v = vus(scores, labels, max_buffer);
  r.vus_pr = v.pr;
  r.vus_roc = v.roc;
  r.max_buffer = max_buffer;
  return r;
}

void write_report(std::ostream& out, const EvalReport& r) {
  out << "precision = " << format_real(r.counts.precision) << '\n'
      << "recall = " << format_real(r.counts.recall) << '\n'
      << "f1 = " << format_real(r.counts.f1) << '\n'
      << "auc_pr = " << format_real(r.auc_pr) << '\n'
      << "auc_roc = " << format_real(r.auc_roc) << '\n'
      << "vus_pr = " << format_real(r.vus_pr) << '\n'
      << "vus_roc = " << format_real(r.vus_roc) << '\n'
      << "tp = " << r.counts.tp << '\n'
      << "fp = " << r.counts.fp << '\n'
      << "fn = " << r.counts.fn << '\n'
      << "tn = " << r.counts.tn << '\n'
      << "max_buffer = " << r.max_buffer << '\n';
}

void write_report_csv_header(std::ostream& out) {
  out << "precision,recall,f1,auc_pr,auc_roc,vus_pr,vus_roc,tp,fp,fn,tn,max_buffer\n";
}

void write_report_csv_row(std::ostream& out, const EvalReport& r) {
  out << format_real(r.counts.precision) << ',' << format_real(r.counts.recall) << ',' << format_real(r.counts.f1)
      << ',' << format_real(r.auc_pr) << ',' << format_real(r.auc_roc) << ',' << format_real(r.vus_pr) << ','
      << format_real(r.vus_roc) << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn << ','
      << r.counts.tn << ',' << r.max_buffer << '\n';
}

}  // namespace edad
