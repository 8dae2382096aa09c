#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace csiloc {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a over a byte range; used as the trailing checksum of container files.
inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Little-endian buffer writer. All container formats in this project are
// explicitly little-endian regardless of host order.
class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }

    void put_u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void put_i32(std::int32_t v) { put_u32(static_cast<std::uint32_t>(v)); }

    void put_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void put_f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(bits);
    }

    void put_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }

    void put_string(const std::string& s) {
        put_u32(static_cast<std::uint32_t>(s.size()));
        put_bytes(s.data(), s.size());
    }

    const std::vector<std::uint8_t>& bytes() const { return buf_; }
    std::vector<std::uint8_t>& bytes() { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t n) : data_(data), size_(n) {}
    explicit ByteReader(const std::vector<std::uint8_t>& v) : data_(v.data()), size_(v.size()) {}

    std::uint8_t get_u8() { return take(1)[0]; }

    std::uint32_t get_u32() {
        const std::uint8_t* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        return v;
    }

    std::int32_t get_i32() { return static_cast<std::int32_t>(get_u32()); }

    std::uint64_t get_u64() {
        const std::uint8_t* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return v;
    }

    double get_f64() {
        std::uint64_t bits = get_u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string get_string() {
        std::uint32_t n = get_u32();
        const std::uint8_t* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }

    void get_bytes(void* out, std::size_t n) { std::memcpy(out, take(n), n); }

    std::size_t remaining() const { return size_ - pos_; }
    std::size_t position() const { return pos_; }

private:
    const std::uint8_t* take(std::size_t n) {
        if (pos_ + n > size_) throw IoError("truncated input: read past end of buffer");
        const std::uint8_t* p = data_ + pos_;
        pos_ += n;
        return p;
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

// Whole-file helpers (binary).
std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::string read_file_text(const std::string& path);

// Shortest round-trip-safe decimal rendering, used by all CSV writers.
inline std::string format_g17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
void write_file_text(const std::string& path, const std::string& text);

} // namespace csiloc
