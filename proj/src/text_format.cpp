#include "jmlh/text_format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace jmlh {

std::string format_sig(double value, int digits) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, digits);
    return std::string(buf, res.ptr);
}

double round_sig(double value, int digits) {
    if (!std::isfinite(value)) return value;
    const std::string text = format_sig(value, digits);
    double out = 0.0;
    std::from_chars(text.data(), text.data() + text.size(), out);
    return out;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

void write_precision_csv(const std::filesystem::path& path, std::span<const PrecisionPoint> curve) {
    auto out = open_csv(path);
    out << "k,precision\n";
    for (const auto& p : curve) out << p.k << ',' << format_sig(p.precision) << '\n';
}

void write_pr_csv(const std::filesystem::path& path, std::span<const PrPoint> curve) {
    auto out = open_csv(path);
    out << "recall,precision\n";
    for (const auto& p : curve) out << format_sig(p.recall) << ',' << format_sig(p.precision) << '\n';
}

}  // namespace jmlh
