#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "jmlh/retrieval.hpp"

namespace jmlh {

/// Locale-independent decimal text with the given number of significant digits.
std::string format_sig(double value, int digits = 6);

/// value rounded to `digits` significant digits.
double round_sig(double value, int digits = 6);

/// CSV with header `k,precision`.
void write_precision_csv(const std::filesystem::path& path, std::span<const PrecisionPoint> curve);

/// CSV with header `recall,precision`.
void write_pr_csv(const std::filesystem::path& path, std::span<const PrPoint> curve);

}  // namespace jmlh
