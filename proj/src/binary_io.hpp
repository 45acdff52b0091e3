#pragma once

// Little-endian byte buffers and whole-file IO shared by the binary formats.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>

#include "latentstitch/error.hpp"

namespace latentstitch::detail {

class ByteWriter {
public:
    template <class T>
    void put(T value) {
        char raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        out_.append(raw, sizeof(T));
    }
    void put_bytes(const void* data, std::size_t n) { out_.append(static_cast<const char*>(data), n); }
    void put_string16(std::string_view s) {
        require(s.size() <= std::numeric_limits<std::uint16_t>::max(), ErrorCode::BadDims,
                "string longer than 65535 bytes");
        put(static_cast<std::uint16_t>(s.size()));
        out_.append(s);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    std::string_view get_bytes(std::size_t n) {
        need(n);
        auto view = bytes_.substr(pos_, n);
        pos_ += n;
        return view;
    }
    std::string get_string16() { return std::string(get_bytes(get<std::uint16_t>())); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n)
            fail(ErrorCode::TruncatedFile, "need " + std::to_string(n) + " bytes at offset " +
                                               std::to_string(pos_) + ", file has " +
                                               std::to_string(bytes_.size()));
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path);
void spit(const std::filesystem::path& path, std::string_view bytes);

}  // namespace latentstitch::detail
