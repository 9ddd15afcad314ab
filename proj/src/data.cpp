#include "jmlh/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "jmlh/binary_io.hpp"

namespace jmlh {

Labels Labels::single(std::vector<int> classes, int num_classes) {
    for (int c : classes) {
        if (c < 0 || c >= num_classes) {
            throw LabelError("label " + std::to_string(c) + " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
    Labels l;
    l.mode = LabelMode::Single;
    l.num_classes = num_classes;
    l.classes = std::move(classes);
    return l;
}

Labels Labels::multi(BitMatrix multi_hot) {
    if ((multi_hot.array() > 1).any()) throw LabelError("multi-hot labels must be 0 or 1");
    Labels l;
    l.mode = LabelMode::Multi;
    l.num_classes = static_cast<int>(multi_hot.cols());
    l.multi_hot = std::move(multi_hot);
    return l;
}

Index Labels::size() const {
    return mode == LabelMode::Single ? static_cast<Index>(classes.size()) : multi_hot.rows();
}

Labels Labels::select(std::span<const Index> rows) const {
    Labels out;
    out.mode = mode;
    out.num_classes = num_classes;
    if (mode == LabelMode::Single) {
        out.classes.reserve(rows.size());
        for (Index r : rows) out.classes.push_back(classes.at(static_cast<std::size_t>(r)));
    } else {
        out.multi_hot.resize(static_cast<Index>(rows.size()), multi_hot.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) out.multi_hot.row(static_cast<Index>(i)) = multi_hot.row(rows[i]);
    }
    return out;
}

int Labels::primary_class(Index row) const {
    if (mode == LabelMode::Single) return classes.at(static_cast<std::size_t>(row));
    for (Index j = 0; j < multi_hot.cols(); ++j) {
        if (multi_hot(row, j)) return static_cast<int>(j);
    }
    return -1;
}

bool Labels::operator==(const Labels& other) const {
    if (mode != other.mode || num_classes != other.num_classes) return false;
    if (mode == LabelMode::Single) return classes == other.classes;
    return multi_hot.rows() == other.multi_hot.rows() && multi_hot.cols() == other.multi_hot.cols() &&
           multi_hot == other.multi_hot;
}

namespace {

std::vector<Index> rows_where(const std::vector<Role>& roles, auto pred) {
    std::vector<Index> out;
    for (std::size_t i = 0; i < roles.size(); ++i)
        if (pred(roles[i])) out.push_back(static_cast<Index>(i));
    return out;
}

}  // namespace

std::vector<Index> Dataset::train_rows() const {
    return rows_where(roles, [](Role r) { return r == Role::Train; });
}

std::vector<Index> Dataset::query_rows() const {
    return rows_where(roles, [](Role r) { return r == Role::Query; });
}

std::vector<Index> Dataset::database_rows() const {
    return rows_where(roles, [](Role r) { return r != Role::Query; });
}

bool Dataset::operator==(const Dataset& other) const {
    return features.rows() == other.features.rows() && features.cols() == other.features.cols() &&
           features == other.features && labels == other.labels && roles == other.roles;
}

Matrix select_rows(const Matrix& m, std::span<const Index> rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
}

Standardizer Standardizer::fit(const Matrix& features) {
    if (features.rows() == 0) throw InputError("cannot fit a standardizer on zero rows");
    Standardizer s;
    s.mean = features.colwise().mean().transpose();
    const Matrix centered = features.rowwise() - s.mean.transpose();
    s.scale = (centered.colwise().squaredNorm() / static_cast<double>(features.rows())).cwiseSqrt().transpose();
    for (Index j = 0; j < s.scale.size(); ++j)
        if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
    return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
    if (empty()) return features;
    require_shape(features.cols() == mean.size(), "standardizer width mismatch");
    Matrix out = features.rowwise() - mean.transpose();
    out.array().rowwise() /= scale.transpose().array();
    return out;
}

Dataset make_blobs(const BlobSpec& spec) {
    if (spec.classes < 2) throw InputError("make_blobs: need at least 2 classes");
    if (spec.per_class < 1 || spec.dim < 1) throw InputError("make_blobs: per-class count and dim must be >= 1");
    RngStream rng(spec.seed);
    Matrix centers(spec.classes, spec.dim);
    for (Index c = 0; c < centers.rows(); ++c)
        for (Index j = 0; j < spec.dim; ++j) centers(c, j) = spec.center_scale * rng.normal();

    Dataset ds;
    const Index n = spec.classes * spec.per_class;
    ds.features.resize(n, spec.dim);
    std::vector<int> classes;
    classes.reserve(static_cast<std::size_t>(n));
    Index row = 0;
    for (int c = 0; c < spec.classes; ++c) {
        for (Index k = 0; k < spec.per_class; ++k, ++row) {
            for (Index j = 0; j < spec.dim; ++j) {
                const double noise = spec.noise_scale == 0.0 ? 0.0 : spec.noise_scale * rng.normal();
                // Rounded to single precision so files round-trip exactly.
                ds.features(row, j) = static_cast<float>(centers(c, j) + noise);
            }
            classes.push_back(c);
        }
    }
    ds.labels = Labels::single(std::move(classes), spec.classes);
    ds.roles.assign(static_cast<std::size_t>(n), Role::Database);
    return ds;
}

Dataset split_protocol(const Dataset& ds, Index queries_per_class, Index train_per_class, std::uint64_t seed) {
    if (queries_per_class < 0 || train_per_class < 0) throw InputError("split_protocol: negative counts");
    std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(ds.labels.num_classes));
    for (Index i = 0; i < ds.size(); ++i) {
        const int c = ds.labels.primary_class(i);
        if (c >= 0) by_class[static_cast<std::size_t>(c)].push_back(i);
    }
    Dataset out = ds;
    out.roles.assign(static_cast<std::size_t>(ds.size()), Role::Database);
    RngStream rng(seed);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& pool = by_class[c];
        const auto need = static_cast<std::size_t>(queries_per_class + train_per_class);
        if (pool.size() < need) {
            throw InputError("split_protocol: class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                             " rows, " + std::to_string(need) + " requested");
        }
        // Partial Fisher-Yates: the first `need` slots become a uniform sample without replacement.
        for (std::size_t i = 0; i < need; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        for (std::size_t i = 0; i < need; ++i) {
            const bool is_query = i < static_cast<std::size_t>(queries_per_class);
            out.roles[static_cast<std::size_t>(pool[i])] = is_query ? Role::Query : Role::Train;
        }
    }
    return out;
}

// BHF1 layout (little-endian):
//   "BHF1" | u64 n | u64 d | u8 label_mode | u32 num_classes
//   | labels: n x i32 (single) or n x num_classes x u8 (multi-hot)
//   | roles: n x u8 | features: n x d x f32, row-major
void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    require_shape(ds.labels.size() == ds.size() && static_cast<Index>(ds.roles.size()) == ds.size(),
                  "save_dataset: labels/roles do not match row count");
    io::ByteWriter w;
    w.magic("BHF1");
    w.u64(static_cast<std::uint64_t>(ds.size()));
    w.u64(static_cast<std::uint64_t>(ds.dim()));
    w.u8(static_cast<std::uint8_t>(ds.labels.mode));
    w.u32(static_cast<std::uint32_t>(ds.labels.num_classes));
    if (ds.labels.mode == LabelMode::Single) {
        for (int c : ds.labels.classes) w.i32(c);
    } else {
        for (Index i = 0; i < ds.size(); ++i)
            for (Index j = 0; j < ds.labels.multi_hot.cols(); ++j) w.u8(ds.labels.multi_hot(i, j));
    }
    for (Role r : ds.roles) w.u8(static_cast<std::uint8_t>(r));
    for (Index i = 0; i < ds.size(); ++i)
        for (Index j = 0; j < ds.dim(); ++j) w.f32(static_cast<float>(ds.features(i, j)));
    io::write_file(path, w.bytes());
}

namespace {

Dataset load_bhf1(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader r(bytes, path.string());
    r.expect_magic("BHF1");
    const std::uint64_t n = r.u64("row count");
    const std::uint64_t d = r.u64("feature width");
    const std::uint8_t mode = r.u8("label mode");
    if (mode > 1) r.fail("unknown label mode " + std::to_string(mode));
    const std::uint32_t num_classes = r.u32("class count");

    Dataset ds;
    if (mode == 0) {
        r.need_items(n, 4, "labels");
        std::vector<int> classes(n);
        for (auto& c : classes) {
            c = r.i32("label");
            if (c < 0 || static_cast<std::uint32_t>(c) >= num_classes) r.fail("label out of range");
        }
        ds.labels = Labels::single(std::move(classes), static_cast<int>(num_classes));
    } else {
        r.need_items(n, num_classes, "multi-hot labels");
        BitMatrix hot(static_cast<Index>(n), static_cast<Index>(num_classes));
        for (Index i = 0; i < hot.rows(); ++i) {
            for (Index j = 0; j < hot.cols(); ++j) {
                hot(i, j) = r.u8("multi-hot label");
                if (hot(i, j) > 1) r.fail("multi-hot label not 0/1");
            }
        }
        ds.labels = Labels::multi(std::move(hot));
    }
    r.need_items(n, 1, "roles");
    ds.roles.resize(n);
    for (auto& role : ds.roles) {
        const std::uint8_t v = r.u8("role");
        if (v > 2) r.fail("unknown role " + std::to_string(v));
        role = static_cast<Role>(v);
    }
    if (d != 0) r.need_items(n, d * 4, "features");
    ds.features.resize(static_cast<Index>(n), static_cast<Index>(d));
    for (Index i = 0; i < ds.features.rows(); ++i)
        for (Index j = 0; j < ds.features.cols(); ++j) ds.features(i, j) = r.f32("feature");
    r.expect_end();
    return ds;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    return cells;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string(), 0);
    std::string line;
    std::uint64_t offset = 0;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty CSV", 0);
    const auto header = split_csv_line(line);
    Index d = 0;
    while (d < static_cast<Index>(header.size()) && header[static_cast<std::size_t>(d)] == "f" + std::to_string(d)) ++d;
    const auto extra = header.size() - static_cast<std::size_t>(d);
    const bool single = extra == 1 && header.back() == "label";
    if (!single) {
        for (std::size_t k = 0; k < extra; ++k) {
            if (header[static_cast<std::size_t>(d) + k] != "y" + std::to_string(k)) {
                throw FormatError(path.string() + ": header must be f0..f{d-1},label or f0..f{d-1},y0..y{c-1}", 0);
            }
        }
        if (extra == 0) throw FormatError(path.string() + ": header has no label columns", 0);
    }
    offset += line.size() + 1;

    std::vector<std::vector<double>> rows;
    std::vector<int> classes;
    std::vector<std::vector<std::uint8_t>> hot;
    while (std::getline(in, line)) {
        const std::uint64_t line_offset = offset;
        offset += line.size() + 1;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw FormatError(path.string() + ": expected " + std::to_string(header.size()) + " cells, got " +
                                  std::to_string(cells.size()),
                              line_offset);
        }
        auto parse = [&](const std::string& s) {
            double v = 0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
                throw FormatError(path.string() + ": not a number: '" + s + "'", line_offset);
            }
            return v;
        };
        std::vector<double> row;
        for (Index j = 0; j < d; ++j) row.push_back(parse(cells[static_cast<std::size_t>(j)]));
        rows.push_back(std::move(row));
        if (single) {
            const double v = parse(cells.back());
            if (v < 0 || v != static_cast<int>(v)) throw FormatError(path.string() + ": bad class label", line_offset);
            classes.push_back(static_cast<int>(v));
        } else {
            std::vector<std::uint8_t> tags;
            for (std::size_t k = 0; k < extra; ++k) {
                const double v = parse(cells[static_cast<std::size_t>(d) + k]);
                if (v != 0.0 && v != 1.0) throw FormatError(path.string() + ": multi-hot entry not 0/1", line_offset);
                tags.push_back(static_cast<std::uint8_t>(v));
            }
            hot.push_back(std::move(tags));
        }
    }

    Dataset ds;
    const auto n = static_cast<Index>(rows.size());
    ds.features.resize(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) ds.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    if (single) {
        const int c = classes.empty() ? 0 : *std::max_element(classes.begin(), classes.end()) + 1;
        ds.labels = Labels::single(std::move(classes), c);
    } else {
        BitMatrix m(n, static_cast<Index>(extra));
        for (Index i = 0; i < n; ++i)
            for (Index k = 0; k < m.cols(); ++k) m(i, k) = hot[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        ds.labels = Labels::multi(std::move(m));
    }
    ds.roles.assign(static_cast<std::size_t>(n), Role::Database);
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
    if (path.extension() == ".csv") return load_csv(path);
    return load_bhf1(path);
}

}  // namespace jmlh
