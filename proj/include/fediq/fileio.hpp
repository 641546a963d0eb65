#pragma once

// Minimal whole-file binary IO used by the container formats.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "fediq/common.hpp"

namespace fediq {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    require(f != nullptr, "cannot open file: " + path);
    std::fseek(f.get(), 0, SEEK_END);
    const long size = std::ftell(f.get());
    std::fseek(f.get(), 0, SEEK_SET);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
    if (size > 0 && std::fread(bytes.data(), 1, bytes.size(), f.get()) != bytes.size())
        throw data_error("read failed: " + path);
    return bytes;
}

inline void write_file_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    require(f != nullptr, "cannot create file: " + path);
    if (!bytes.empty() && std::fwrite(bytes.data(), 1, bytes.size(), f.get()) != bytes.size())
        throw data_error("write failed: " + path);
}

inline void write_file_text(const std::string& path, const std::string& text) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    require(f != nullptr, "cannot create file: " + path);
    if (!text.empty() && std::fwrite(text.data(), 1, text.size(), f.get()) != text.size())
        throw data_error("write failed: " + path);
}

inline std::string read_file_text(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace fediq
