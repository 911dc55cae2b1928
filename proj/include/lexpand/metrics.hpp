#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lexpand {

// Unweighted mean of per-class F1 over all `num_classes` classes. Precision or
// recall with a zero denominator counts as 0, so a class that is neither
// predicted nor present contributes an F1 of 0.
double macro_avg_f1(std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                    std::size_t num_classes);

// Same, over string labels; labels outside `classes` are an error.
double macro_avg_f1(std::span<const std::string> gold, std::span<const std::string> predicted,
                    std::span<const std::string> classes);

double accuracy(std::span<const std::size_t> gold, std::span<const std::size_t> predicted);

// Kendall tau-b with tie correction, O(n log n):
//   (C - D) / sqrt((C + D + Tx) (C + D + Ty))
// where Tx (Ty) counts pairs tied only in x (only in y).
// Throws UndefinedValueError when either list is constant.
double kendall_tau(std::span<const double> x, std::span<const double> y);

}  // namespace lexpand
