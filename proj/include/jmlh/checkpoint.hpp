#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jmlh/data.hpp"
#include "jmlh/model.hpp"

namespace jmlh {

/// A trained model plus the feature standardization it was trained under.
struct Checkpoint {
    JmlhModel model;
    Standardizer standardizer;

    bool operator==(const Checkpoint& other) const;
};

// JMLH1 layout (little-endian):
//   "JMLH1"
//   u64 m | u8 label_mode | u8 variant | u8 estimator
//   u32 encoder depth | per encoder layer: u64 in, u64 out | head: u64 in, u64 out
//   u64 standardizer width (0 when absent)
//   payload, f64 each: for every encoder layer weight (row-major, out x in) then bias;
//                      head weight then bias; standardizer mean then scale
//   u64 FNV-1a-64 checksum of the payload bytes
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& context = "checkpoint");

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace jmlh
