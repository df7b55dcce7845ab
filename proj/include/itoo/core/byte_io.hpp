#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>

#include "itoo/core/errors.hpp"

namespace itoo {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

/// Append-only little-endian encoder.
class ByteWriter {
public:
    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void put(const T& v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.append(p, sizeof(T));
    }
    template <typename T>
    void put_span(std::span<const T> v) {
        buf_.append(reinterpret_cast<const char*>(v.data()), v.size_bytes());
    }
    void put_bytes(const char* p, std::size_t n) { buf_.append(p, n); }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

/// Bounds-checked decoder; every failure reports the byte offset.
class ByteReader {
public:
    explicit ByteReader(std::span<const char> data) : data_(data) {}

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + off_, sizeof(T));
        off_ += sizeof(T);
        return v;
    }
    template <typename T>
    void get_into(std::span<T> out) {
        need(out.size_bytes());
        std::memcpy(out.data(), data_.data() + off_, out.size_bytes());
        off_ += out.size_bytes();
    }
    std::span<const char> take(std::size_t n) {
        need(n);
        auto s = data_.subspan(off_, n);
        off_ += n;
        return s;
    }
    std::size_t offset() const { return off_; }
    std::size_t remaining() const { return data_.size() - off_; }

private:
    void need(std::size_t n) const {
        if (n > remaining()) throw ParseError("unexpected end of data", off_);
    }

    std::span<const char> data_;
    std::size_t off_ = 0;
};

}  // namespace itoo
