#include "dfcn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dfcn/cluster.hpp"
#include "dfcn/errors.hpp"

namespace dfcn {

namespace {

void check_lengths(const Labels& a, const Labels& b) {
  if (a.size() != b.size())
    throw ShapeError("label length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.empty()) throw ValidationError("empty labeling");
}

void check_range(const Labels& l, std::size_t k, const char* which) {
  for (int v : l)
    if (v < 0 || static_cast<std::size_t>(v) >= k)
      throw ValidationError(std::string(which) + " label " + std::to_string(v) + " outside [0, " +
                            std::to_string(k) + ")");
}

std::size_t span_of(const Labels& l) {
  int mx = 0;
  for (int v : l) {
    if (v < 0) throw ValidationError("negative label " + std::to_string(v));
    mx = std::max(mx, v);
  }
  return static_cast<std::size_t>(mx) + 1;
}

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  return h;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

Contingency contingency(const Labels& y_true, const Labels& y_pred, std::size_t k) {
  check_lengths(y_true, y_pred);
  check_range(y_true, k, "true");
  check_range(y_pred, k, "predicted");
  Contingency t(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i)
    ++t[static_cast<std::size_t>(y_pred[i])][static_cast<std::size_t>(y_true[i])];
  return t;
}

std::vector<int> best_mapping(const Labels& y_true, const Labels& y_pred, std::size_t k) {
  const Contingency t = contingency(y_true, y_pred, k);
  Matrix cost(k, k);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t y = 0; y < k; ++y) cost(c, y) = -static_cast<double>(t[c][y]);
  return kuhn_munkres(cost).row_to_col;
}

Labels relabel(const Labels& y_pred, const std::vector<int>& mapping) {
  Labels out(y_pred.size());
  for (std::size_t i = 0; i < y_pred.size(); ++i) out[i] = mapping.at(static_cast<std::size_t>(y_pred[i]));
  return out;
}

double accuracy(const Labels& y_true, const Labels& y_pred, std::size_t k) {
  const Labels mapped = relabel(y_pred, best_mapping(y_true, y_pred, k));
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hit += mapped[i] == y_true[i];
  return static_cast<double>(hit) / static_cast<double>(y_true.size());
}

double nmi(const Labels& y_true, const Labels& y_pred, NmiNorm norm) {
  check_lengths(y_true, y_pred);
  const std::size_t kt = span_of(y_true), kp = span_of(y_pred);
  const double n = static_cast<double>(y_true.size());
  std::vector<double> a(kp, 0.0), b(kt, 0.0);
  std::vector<std::vector<double>> joint(kp, std::vector<double>(kt, 0.0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto c = static_cast<std::size_t>(y_pred[i]);
    const auto y = static_cast<std::size_t>(y_true[i]);
    joint[c][y] += 1.0;
    a[c] += 1.0;
    b[y] += 1.0;
  }
  const double ht = entropy(b, n), hp = entropy(a, n);
  if (ht == 0.0 && hp == 0.0) return 1.0;
  if (ht == 0.0 || hp == 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t c = 0; c < kp; ++c)
    for (std::size_t y = 0; y < kt; ++y)
      if (joint[c][y] > 0.0) mi += (joint[c][y] / n) * std::log(n * joint[c][y] / (a[c] * b[y]));
  const double denom = norm == NmiNorm::arithmetic ? 0.5 * (ht + hp) : std::sqrt(ht * hp);
  return std::clamp(mi / denom, 0.0, 1.0);
}

double ari(const Labels& y_true, const Labels& y_pred) {
  check_lengths(y_true, y_pred);
  const std::size_t kt = span_of(y_true), kp = span_of(y_pred);
  std::vector<double> a(kp, 0.0), b(kt, 0.0);
  std::vector<std::vector<double>> joint(kp, std::vector<double>(kt, 0.0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto c = static_cast<std::size_t>(y_pred[i]);
    const auto y = static_cast<std::size_t>(y_true[i]);
    joint[c][y] += 1.0;
    a[c] += 1.0;
    b[y] += 1.0;
  }
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& row : joint)
    for (double v : row) index += choose2(v);
  for (double v : a) sa += choose2(v);
  for (double v : b) sb += choose2(v);
  const double total = choose2(static_cast<double>(y_true.size()));
  const double expected = total > 0.0 ? sa * sb / total : 0.0;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double macro_f1(const Labels& y_true, const Labels& y_pred, std::size_t k) {
  const Labels mapped = relabel(y_pred, best_mapping(y_true, y_pred, k));
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const int cls = static_cast<int>(c);
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == cls, p = mapped[i] == cls;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const double denom = 2.0 * tp + fp + fn;
    if (denom > 0.0) sum += 2.0 * tp / denom;
  }
  return sum / static_cast<double>(k);
}

EvalReport evaluate(const Labels& y_true, const Labels& y_pred, std::size_t k, NmiNorm norm) {
  EvalReport r;
  r.table = contingency(y_true, y_pred, k);
  r.mapping = best_mapping(y_true, y_pred, k);
  r.acc = accuracy(y_true, y_pred, k);
  r.nmi = nmi(y_true, y_pred, norm);
  r.ari = ari(y_true, y_pred);
  r.f1 = macro_f1(y_true, y_pred, k);
  return r;
}

}  // namespace dfcn
