#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "jmlh/bottleneck.hpp"
#include "jmlh/core_math.hpp"

namespace jmlh {

enum class LabelMode : std::uint8_t { Single = 0, Multi = 1 };

/// Either one class index per row or a multi-hot row per sample.
struct Labels {
    LabelMode mode = LabelMode::Single;
    int num_classes = 0;
    std::vector<int> classes;  // Single
    BitMatrix multi_hot;       // Multi, rows x num_classes

    static Labels single(std::vector<int> classes, int num_classes);
    static Labels multi(BitMatrix multi_hot);

    Index size() const;
    Labels select(std::span<const Index> rows) const;
    /// Class used for per-class sampling: the label itself, or the lowest set tag.
    int primary_class(Index row) const;

    bool operator==(const Labels& other) const;
};

/// Row roles. Train rows are part of the retrieval database.
enum class Role : std::uint8_t { Database = 0, Train = 1, Query = 2 };

struct Dataset {
    Matrix features;  // n x d
    Labels labels;
    std::vector<Role> roles;  // n

    Index size() const { return features.rows(); }
    Index dim() const { return features.cols(); }

    std::vector<Index> train_rows() const;
    std::vector<Index> query_rows() const;
    /// Database and Train rows, in dataset order.
    std::vector<Index> database_rows() const;

    bool operator==(const Dataset& other) const;
};

Matrix select_rows(const Matrix& m, std::span<const Index> rows);

/// Per-dimension zero mean / unit variance, fitted on one split and applied to all.
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Matrix& features);
    Matrix apply(const Matrix& features) const;
    bool empty() const { return mean.size() == 0; }
};

struct BlobSpec {
    int classes = 10;
    Index dim = 64;
    Index per_class = 210;
    double center_scale = 1.0;
    double noise_scale = 1.0;
    std::uint64_t seed = 0;
};

/// One isotropic Gaussian cluster per class; rows are class-major. All rows are Database.
Dataset make_blobs(const BlobSpec& spec);

/// Per class: draw queries uniformly without replacement, then train rows
/// from what remains. Everything not drawn as a query is database.
Dataset split_protocol(const Dataset& ds, Index queries_per_class, Index train_per_class, std::uint64_t seed);

/// BHF1 binary file, or CSV when the extension is .csv.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

/// CSV with header f0..f{d-1},label (single) or f0..f{d-1},y0..y{c-1} (multi-hot).
/// All rows get the Database role.
Dataset load_csv(const std::filesystem::path& path);

}  // namespace jmlh
