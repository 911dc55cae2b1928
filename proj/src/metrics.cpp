#include "lexpand/metrics.hpp"

#include "lexpand/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

namespace lexpand {
namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error("label lists differ in length");
  if (a == 0) throw Error("metric requires at least one item");
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// Sorts v[lo, hi) ascending and returns the number of inversions removed.
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(v, scratch, lo, mid) + merge_count(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

// Sum of t (t - 1) / 2 over runs of equal values in a sorted range.
template <typename It, typename Eq>
std::uint64_t tied_pairs(It first, It last, Eq eq) {
  std::uint64_t total = 0;
  while (first != last) {
    It run = first;
    std::uint64_t t = 0;
    while (run != last && eq(*run, *first)) {
      ++run;
      ++t;
    }
    total += t * (t - 1) / 2;
    first = run;
  }
  return total;
}

}  // namespace

double macro_avg_f1(std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                    std::size_t num_classes) {
  check_lengths(gold.size(), predicted.size());
  if (num_classes == 0) throw Error("macro F1 requires at least one class");
  std::vector<double> tp(num_classes, 0.0), fp(num_classes, 0.0), fn(num_classes, 0.0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= num_classes || predicted[i] >= num_classes) throw Error("label outside class set");
    if (gold[i] == predicted[i]) {
      tp[gold[i]] += 1.0;
    } else {
      fp[predicted[i]] += 1.0;
      fn[gold[i]] += 1.0;
    }
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double p = safe_ratio(tp[c], tp[c] + fp[c]);
    const double r = safe_ratio(tp[c], tp[c] + fn[c]);
    sum += safe_ratio(2.0 * p * r, p + r);
  }
  return sum / static_cast<double>(num_classes);
}

double macro_avg_f1(std::span<const std::string> gold, std::span<const std::string> predicted,
                    std::span<const std::string> classes) {
  check_lengths(gold.size(), predicted.size());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < classes.size(); ++c) index.emplace(classes[c], c);
  auto encode = [&](std::span<const std::string> labels) {
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
      const auto it = index.find(l);
      if (it == index.end()) throw Error("label '" + l + "' outside class set");
      out.push_back(it->second);
    }
    return out;
  };
  const auto g = encode(gold);
  const auto p = encode(predicted);
  return macro_avg_f1(g, p, classes.size());
}

double accuracy(std::span<const std::size_t> gold, std::span<const std::size_t> predicted) {
  check_lengths(gold.size(), predicted.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == predicted[i];
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("kendall_tau: lists differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw Error("kendall_tau: need at least two observations");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error("kendall_tau: non-finite value");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  const auto u = static_cast<std::uint64_t>(n);
  const std::uint64_t all_pairs = u * (u - 1) / 2;
  const std::uint64_t x_ties = tied_pairs(order.begin(), order.end(),
                                          [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });
  const std::uint64_t joint_ties = tied_pairs(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] == x[b] && y[a] == y[b];
  });

  std::vector<double> ys(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::uint64_t discordant = merge_count(ys, scratch, 0, n);
  const std::uint64_t y_ties = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  // all_pairs = C + D + Tx + Ty + Txy, with x_ties = Tx + Txy and y_ties = Ty + Txy.
  const std::uint64_t x_untied = all_pairs - x_ties;  // C + D + Ty
  const std::uint64_t y_untied = all_pairs - y_ties;  // C + D + Tx
  if (x_untied == 0 || y_untied == 0) throw UndefinedValueError("kendall_tau: a list is constant");
  const std::uint64_t concordant_plus_discordant = all_pairs - x_ties - y_ties + joint_ties;
  const auto concordant = static_cast<std::int64_t>(concordant_plus_discordant - discordant);
  const auto diff = concordant - static_cast<std::int64_t>(discordant);
  return static_cast<double>(diff) /
         std::sqrt(static_cast<double>(y_untied) * static_cast<double>(x_untied));
}

}  // namespace lexpand
