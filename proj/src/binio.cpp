#include "csiloc/binio.hpp"

#include <cstdio>
#include <memory>

namespace csiloc {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open file: " + path);
    return f;
}

} // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    if (std::fseek(f.get(), 0, SEEK_END) != 0) throw IoError("seek failed: " + path);
    const long size = std::ftell(f.get());
    if (size < 0) throw IoError("tell failed: " + path);
    if (std::fseek(f.get(), 0, SEEK_SET) != 0) throw IoError("seek failed: " + path);
    std::vector<std::uint8_t> data(static_cast<std::size_t>(size));
    if (size > 0 && std::fread(data.data(), 1, data.size(), f.get()) != data.size())
        throw IoError("short read: " + path);
    return data;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& data) {
    FilePtr f = open_file(path, "wb");
    if (!data.empty() && std::fwrite(data.data(), 1, data.size(), f.get()) != data.size())
        throw IoError("short write: " + path);
    if (std::fflush(f.get()) != 0) throw IoError("flush failed: " + path);
}

std::string read_file_text(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_file_text(const std::string& path, const std::string& text) {
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

} // namespace csiloc
