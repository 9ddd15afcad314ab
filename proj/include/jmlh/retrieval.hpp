#pragma once

// Bit-packed Hamming search and retrieval metrics.
//
// Codes are packed LSB-first into 64-bit words, code-major: bit j of code i
// lives in payload[i * words_per_code + j / 64] at position j % 64. Unused
// high bits of the last word are always zero.
//
// Rankings sort by ascending Hamming distance and break ties by ascending
// database index.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "jmlh/bottleneck.hpp"
#include "jmlh/data.hpp"

namespace jmlh {

struct PackedCodes {
    Index n = 0;
    Index m = 0;
    Index words_per_code = 0;
    std::vector<std::uint64_t> payload;

    std::span<const std::uint64_t> code(Index i) const {
        return {payload.data() + i * words_per_code, static_cast<std::size_t>(words_per_code)};
    }

    bool operator==(const PackedCodes&) const = default;
};

PackedCodes pack_codes(const BitMatrix& codes);
/// Row-list form; rejects ragged input.
PackedCodes pack_codes(const std::vector<std::vector<std::uint8_t>>& rows);
BitMatrix unpack_codes(const PackedCodes& packed);

std::uint32_t hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Distances from one query to every database code.
std::vector<std::uint32_t> scan_distances(std::span<const std::uint64_t> query, const PackedCodes& db);

/// Database indices by (distance, index), via a counting sort over distances 0..m.
std::vector<std::uint32_t> rank_database(std::span<const std::uint64_t> query, const PackedCodes& db);

/// Single-label: equal labels. Multi-label: at least one shared tag.
class RelevanceJudge {
public:
    RelevanceJudge(const Labels& query_labels, const Labels& db_labels);

    LabelMode mode() const { return mode_; }
    Index query_count() const { return query_count_; }
    Index db_count() const { return db_count_; }
    bool relevant(Index query, Index item) const;

private:
    LabelMode mode_;
    Index query_count_;
    Index db_count_;
    std::vector<int> query_classes_;
    std::vector<int> db_classes_;
    Index words_ = 0;
    std::vector<std::uint64_t> query_tags_;
    std::vector<std::uint64_t> db_tags_;
};

/// Sum over relevant positions i <= k of precision@i, divided by min(total_relevant, k).
/// Only the first k flags are read. Returns 0 when the denominator is 0.
double average_precision(std::span<const std::uint8_t> relevance, Index total_relevant, Index k);

/// k = 0 means the whole database (mAP@all).
double mean_ap(const PackedCodes& queries, const PackedCodes& db, const RelevanceJudge& judge, Index k);

struct PrecisionPoint {
    Index k;
    double precision;
};

/// For each k, mean over queries of the relevant fraction among the top min(k, n).
std::vector<PrecisionPoint> precision_at_k(const PackedCodes& queries, const PackedCodes& db,
                                           const RelevanceJudge& judge, std::span<const Index> ks);

enum class EmptyBall { CountAsZero, Skip };

/// Mean over queries of (relevant within distance <= radius) / (retrieved within distance <= radius).
double precision_at_radius(const PackedCodes& queries, const PackedCodes& db, const RelevanceJudge& judge,
                           Index radius = 2, EmptyBall empty = EmptyBall::CountAsZero);

struct PrPoint {
    double recall;
    double precision;
};

/// One point per Hamming threshold t = 0..m, averaged over queries that have at least
/// one relevant item. A threshold that retrieves nothing has precision 0.
std::vector<PrPoint> pr_curve(const PackedCodes& queries, const PackedCodes& db, const RelevanceJudge& judge);

struct EvalOptions {
    Index map_k = 0;
    std::vector<Index> precision_ks = {1, 10, 50, 100, 200, 500, 1000};
    Index radius = 2;
    EmptyBall empty_ball = EmptyBall::CountAsZero;
};

struct EvalReport {
    Index map_k = 0;
    double map_at_k = 0.0;
    std::vector<PrecisionPoint> precision_at_k;
    double p_at_radius = 0.0;
    Index radius = 2;
    std::vector<PrPoint> pr_curve;
};

EvalReport evaluate(const PackedCodes& queries, const PackedCodes& db, const RelevanceJudge& judge,
                    const EvalOptions& options = {});

// BHC1 layout (little-endian): "BHC1" | u64 n | u64 m | n * ceil(m/64) x u64 payload.
void save_codes(const PackedCodes& codes, const std::filesystem::path& path);
PackedCodes load_codes(const std::filesystem::path& path);

}  // namespace jmlh
