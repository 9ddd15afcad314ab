#include "jmlh/retrieval.hpp"

#include <bit>

#include "jmlh/binary_io.hpp"

namespace jmlh {

namespace {

Index words_for(Index m) { return (m + 63) / 64; }

void check_compatible(const PackedCodes& queries, const PackedCodes& db, const RelevanceJudge& judge) {
    require_shape(queries.m == db.m, "query and database code lengths differ");
    require_shape(judge.query_count() == queries.n && judge.db_count() == db.n,
                  "relevance labels do not match the code sets");
    if (queries.n == 0) throw InputError("empty query set");
}

std::vector<std::uint8_t> relevance_row(const RelevanceJudge& judge, Index q, Index n, Index& total) {
    std::vector<std::uint8_t> rel(static_cast<std::size_t>(n));
    total = 0;
    for (Index j = 0; j < n; ++j) {
        rel[static_cast<std::size_t>(j)] = judge.relevant(q, j) ? 1 : 0;
        total += rel[static_cast<std::size_t>(j)];
    }
    return rel;
}

}  // namespace

PackedCodes pack_codes(const BitMatrix& codes) {
    PackedCodes p;
    p.n = codes.rows();
    p.m = codes.cols();
    p.words_per_code = words_for(p.m);
    p.payload.assign(static_cast<std::size_t>(p.n * p.words_per_code), 0);
    for (Index i = 0; i < p.n; ++i) {
        std::uint64_t* words = p.payload.data() + i * p.words_per_code;
        for (Index j = 0; j < p.m; ++j) {
            const std::uint8_t bit = codes(i, j);
            if (bit > 1) throw InputError("pack_codes: code entries must be 0 or 1");
            words[j / 64] |= static_cast<std::uint64_t>(bit) << (j % 64);
        }
    }
    return p;
}

PackedCodes pack_codes(const std::vector<std::vector<std::uint8_t>>& rows) {
    const Index m = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
    BitMatrix codes(static_cast<Index>(rows.size()), m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Index>(rows[i].size()) != m) {
            throw DimensionError("pack_codes: row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                 " bits, expected " + std::to_string(m));
        }
        for (Index j = 0; j < m; ++j) codes(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
    return pack_codes(codes);
}

BitMatrix unpack_codes(const PackedCodes& packed) {
    BitMatrix codes(packed.n, packed.m);
    for (Index i = 0; i < packed.n; ++i) {
        const auto words = packed.code(i);
        for (Index j = 0; j < packed.m; ++j) {
            codes(i, j) = static_cast<std::uint8_t>((words[static_cast<std::size_t>(j / 64)] >> (j % 64)) & 1U);
        }
    }
    return codes;
}

std::uint32_t hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    require_shape(a.size() == b.size(), "hamming_distance: code lengths differ");
    std::uint32_t d = 0;
    for (std::size_t w = 0; w < a.size(); ++w) d += static_cast<std::uint32_t>(std::popcount(a[w] ^ b[w]));
    return d;
}

std::vector<std::uint32_t> scan_distances(std::span<const std::uint64_t> query, const PackedCodes& db) {
    require_shape(static_cast<Index>(query.size()) == db.words_per_code, "scan: query/database code lengths differ");
    std::vector<std::uint32_t> dist(static_cast<std::size_t>(db.n));
    if (db.words_per_code == 1) {
        const std::uint64_t q = query[0];
        for (Index i = 0; i < db.n; ++i) {
            dist[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(std::popcount(q ^ db.payload[static_cast<std::size_t>(i)]));
        }
    } else {
        for (Index i = 0; i < db.n; ++i) dist[static_cast<std::size_t>(i)] = hamming_distance(query, db.code(i));
    }
    return dist;
}

std::vector<std::uint32_t> rank_database(std::span<const std::uint64_t> query, const PackedCodes& db) {
    const auto dist = scan_distances(query, db);
    std::vector<std::uint32_t> offsets(static_cast<std::size_t>(db.m) + 2, 0);
    for (auto d : dist) ++offsets[d + 1];
    for (std::size_t t = 1; t < offsets.size(); ++t) offsets[t] += offsets[t - 1];
    std::vector<std::uint32_t> order(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) order[offsets[dist[i]]++] = static_cast<std::uint32_t>(i);
    return order;
}

RelevanceJudge::RelevanceJudge(const Labels& query_labels, const Labels& db_labels)
    : mode_(query_labels.mode), query_count_(query_labels.size()), db_count_(db_labels.size()) {
    if (query_labels.mode != db_labels.mode) throw ConfigError("query and database label modes differ");
    if (mode_ == LabelMode::Single) {
        query_classes_ = query_labels.classes;
        db_classes_ = db_labels.classes;
        return;
    }
    require_shape(query_labels.num_classes == db_labels.num_classes, "query and database tag counts differ");
    words_ = words_for(query_labels.num_classes);
    auto pack = [this](const BitMatrix& hot) {
        std::vector<std::uint64_t> out(static_cast<std::size_t>(hot.rows() * words_), 0);
        for (Index i = 0; i < hot.rows(); ++i)
            for (Index j = 0; j < hot.cols(); ++j)
                if (hot(i, j)) out[static_cast<std::size_t>(i * words_ + j / 64)] |= std::uint64_t(1) << (j % 64);
        return out;
    };
    query_tags_ = pack(query_labels.multi_hot);
    db_tags_ = pack(db_labels.multi_hot);
}

bool RelevanceJudge::relevant(Index query, Index item) const {
    if (mode_ == LabelMode::Single) {
        return query_classes_[static_cast<std::size_t>(query)] == db_classes_[static_cast<std::size_t>(item)];
    }
    for (Index w = 0; w < words_; ++w) {
        if (query_tags_[static_cast<std::size_t>(query * words_ + w)] & db_tags_[static_cast<std::size_t>(item * words_ + w)]) {
            return true;
        }
    }
    return false;
}

double average_precision(std::span<const std::uint8_t> relevance, Index total_relevant, Index k) {
    const Index denom = std::min(total_relevant, k);
    if (denom <= 0) return 0.0;
    const Index depth = std::min<Index>(k, static_cast<Index>(relevance.size()));
    double sum = 0.0;
    Index hits = 0;
    for (Index i = 0; i < depth; ++i) {
        if (relevance[static_cast<std::size_t>(i)]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(denom);
}

double mean_ap(const PackedCodes& queries, const PackedCodes& db, const RelevanceJudge& judge, Index k) {
    check_compatible(queries, db, judge);
    const Index depth = k <= 0 ? db.n : std::min(k, db.n);
    double sum = 0.0;
    std::vector<std::uint8_t> flags(static_cast<std::size_t>(depth));
    for (Index q = 0; q < queries.n; ++q) {
        const auto order = rank_database(queries.code(q), db);
        Index total = 0;
        for (Index j = 0; j < db.n; ++j) total += judge.relevant(q, j) ? 1 : 0;
        for (Index i = 0; i < depth; ++i) flags[static_cast<std::size_t>(i)] = judge.relevant(q, order[static_cast<std::size_t>(i)]);
        sum += average_precision(flags, total, depth);
    }
    return sum / static_cast<double>(queries.n);
}

std::vector<PrecisionPoint> precision_at_k(const PackedCodes& queries, const PackedCodes& db,
                                           const RelevanceJudge& judge, std::span<const Index> ks) {
    check_compatible(queries, db, judge);
    for (Index k : ks)
        if (k < 1) throw InputError("precision_at_k: k must be >= 1");
    std::vector<double> sums(ks.size(), 0.0);
    for (Index q = 0; q < queries.n; ++q) {
        const auto order = rank_database(queries.code(q), db);
        // Prefix counts of relevant items along the ranking.
        std::vector<Index> hits(order.size() + 1, 0);
        for (std::size_t i = 0; i < order.size(); ++i) hits[i + 1] = hits[i] + (judge.relevant(q, order[i]) ? 1 : 0);
        for (std::size_t s = 0; s < ks.size(); ++s) {
            const Index depth = std::min(ks[s], db.n);
            if (depth > 0) sums[s] += static_cast<double>(hits[static_cast<std::size_t>(depth)]) / static_cast<double>(depth);
        }
    }
    std::vector<PrecisionPoint> curve;
    for (std::size_t s = 0; s < ks.size(); ++s) curve.push_back({ks[s], sums[s] / static_cast<double>(queries.n)});
    return curve;
}

double precision_at_radius(const PackedCodes& queries, const PackedCodes& db, const RelevanceJudge& judge,
                           Index radius, EmptyBall empty) {
    check_compatible(queries, db, judge);
    if (radius < 0) throw InputError("precision_at_radius: radius must be >= 0");
    double sum = 0.0;
    Index counted = 0;
    for (Index q = 0; q < queries.n; ++q) {
        const auto dist = scan_distances(queries.code(q), db);
        Index retrieved = 0;
        Index relevant = 0;
        for (Index j = 0; j < db.n; ++j) {
            if (static_cast<Index>(dist[static_cast<std::size_t>(j)]) <= radius) {
                ++retrieved;
                relevant += judge.relevant(q, j) ? 1 : 0;
            }
        }
        if (retrieved == 0) {
            if (empty == EmptyBall::CountAsZero) ++counted;
            continue;
        }
        sum += static_cast<double>(relevant) / static_cast<double>(retrieved);
        ++counted;
    }
    return counted > 0 ? sum / static_cast<double>(counted) : 0.0;
}

std::vector<PrPoint> pr_curve(const PackedCodes& queries, const PackedCodes& db, const RelevanceJudge& judge) {
    check_compatible(queries, db, judge);
    const auto levels = static_cast<std::size_t>(db.m) + 1;
    std::vector<double> recall_sum(levels, 0.0);
    std::vector<double> precision_sum(levels, 0.0);
    Index counted = 0;
    for (Index q = 0; q < queries.n; ++q) {
        const auto dist = scan_distances(queries.code(q), db);
        Index total = 0;
        const auto rel = relevance_row(judge, q, db.n, total);
        if (total == 0) continue;
        ++counted;
        // Histograms of retrieved and relevant items by exact distance.
        std::vector<Index> at(levels, 0);
        std::vector<Index> rel_at(levels, 0);
        for (Index j = 0; j < db.n; ++j) {
            ++at[dist[static_cast<std::size_t>(j)]];
            rel_at[dist[static_cast<std::size_t>(j)]] += rel[static_cast<std::size_t>(j)];
        }
        Index retrieved = 0;
        Index relevant = 0;
        for (std::size_t t = 0; t < levels; ++t) {
            retrieved += at[t];
            relevant += rel_at[t];
            recall_sum[t] += static_cast<double>(relevant) / static_cast<double>(total);
            if (retrieved > 0) precision_sum[t] += static_cast<double>(relevant) / static_cast<double>(retrieved);
        }
    }
    std::vector<PrPoint> curve;
    if (counted == 0) return curve;
    for (std::size_t t = 0; t < levels; ++t) {
        curve.push_back({recall_sum[t] / static_cast<double>(counted), precision_sum[t] / static_cast<double>(counted)});
    }
    return curve;
}

EvalReport evaluate(const PackedCodes& queries, const PackedCodes& db, const RelevanceJudge& judge,
                    const EvalOptions& options) {
    EvalReport report;
    report.map_k = options.map_k;
    report.map_at_k = mean_ap(queries, db, judge, options.map_k);
    report.precision_at_k = precision_at_k(queries, db, judge, options.precision_ks);
    report.radius = options.radius;
    report.p_at_radius = precision_at_radius(queries, db, judge, options.radius, options.empty_ball);
    report.pr_curve = pr_curve(queries, db, judge);
    return report;
}

void save_codes(const PackedCodes& codes, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.magic("BHC1");
    w.u64(static_cast<std::uint64_t>(codes.n));
    w.u64(static_cast<std::uint64_t>(codes.m));
    for (auto word : codes.payload) w.u64(word);
    io::write_file(path, w.bytes());
}

PackedCodes load_codes(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader r(bytes, path.string());
    r.expect_magic("BHC1");
    PackedCodes p;
    const std::uint64_t n = r.u64("code count");
    const std::uint64_t m = r.u64("code length");
    if (m > (std::uint64_t(1) << 20)) r.fail("implausible code length");
    p.n = static_cast<Index>(n);
    p.m = static_cast<Index>(m);
    p.words_per_code = words_for(p.m);
    r.need_items(n, static_cast<std::uint64_t>(p.words_per_code) * 8, "packed payload");
    p.payload.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(p.words_per_code));
    for (auto& word : p.payload) word = r.u64("packed word");
    r.expect_end();
    // Bits beyond m must be clear.
    if (p.m % 64 != 0) {
        const std::uint64_t mask = ~std::uint64_t(0) << (p.m % 64);
        for (Index i = 0; i < p.n; ++i) {
            if (p.payload[static_cast<std::size_t>((i + 1) * p.words_per_code - 1)] & mask) {
                throw FormatError(path.string() + ": padding bits set in code " + std::to_string(i),
                                  20 + static_cast<std::uint64_t>((i + 1) * p.words_per_code - 1) * 8);
            }
        }
    }
    return p;
}

}  // namespace jmlh
