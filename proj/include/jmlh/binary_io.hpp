#pragma once

// Little-endian byte buffers for the on-disk formats (BHF1, BHC1, JMLH1).

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "jmlh/errors.hpp"

namespace jmlh::io {

class ByteWriter {
public:
    void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }

    void u8(std::uint8_t v) { bytes_.push_back(v); }

    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::size_t size() const { return bytes_.size(); }

private:
    void put(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::string context)
        : bytes_(bytes), context_(std::move(context)) {}

    void expect_magic(std::string_view tag) {
        need(tag.size(), "magic");
        if (std::memcmp(bytes_.data() + pos_, tag.data(), tag.size()) != 0) {
            throw FormatError(context_ + ": bad magic, expected \"" + std::string(tag) + "\"", pos_);
        }
        pos_ += tag.size();
    }

    std::uint8_t u8(const char* field) {
        need(1, field);
        return bytes_[pos_++];
    }

    std::uint32_t u32(const char* field) { return static_cast<std::uint32_t>(get(4, field)); }
    std::uint64_t u64(const char* field) { return get(8, field); }
    std::int32_t i32(const char* field) { return static_cast<std::int32_t>(u32(field)); }
    float f32(const char* field) { return std::bit_cast<float>(u32(field)); }
    double f64(const char* field) { return std::bit_cast<double>(u64(field)); }

    std::uint64_t offset() const { return pos_; }
    std::uint64_t remaining() const { return bytes_.size() - pos_; }

    [[noreturn]] void fail(const std::string& what) const { throw FormatError(context_ + ": " + what, pos_); }

    /// Fails unless `count` items of `width` bytes are still available.
    void need_items(std::uint64_t count, std::uint64_t width, const char* field) const {
        if (width != 0 && count > remaining() / width) {
            fail(std::string("truncated while reading ") + field);
        }
    }

    void expect_end() const {
        if (pos_ != bytes_.size()) fail("trailing bytes after payload");
    }

private:
    void need(std::size_t n, const char* field) const {
        if (bytes_.size() - pos_ < n) fail(std::string("truncated while reading ") + field);
    }

    std::uint64_t get(int width, const char* field) {
        need(static_cast<std::size_t>(width), field);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    const std::vector<std::uint8_t>& bytes_;
    std::string context_;
    std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string(), 0);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed for " + path.string());
}

/// FNV-1a, 64-bit.
inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace jmlh::io
