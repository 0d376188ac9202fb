#pragma once

// Little-endian length-prefixed encoding used by the on-disk stores.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

#include "mrs/error.hpp"

namespace mrs::detail {

static_assert(std::endian::native == std::endian::little, "stores assume a little-endian host");

class BinaryWriter {
public:
    template <class T>
        requires std::is_arithmetic_v<T>
    void put(T value) {
        char raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        buffer_.append(raw, sizeof(T));
    }

    void put_string(std::string_view value) {
        put(static_cast<std::uint32_t>(value.size()));
        buffer_.append(value);
    }

    const std::string& bytes() const noexcept { return buffer_; }
    std::string take() noexcept { return std::move(buffer_); }

private:
    std::string buffer_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::string_view data) : data_(data) {}

    template <class T>
        requires std::is_arithmetic_v<T>
    T get() {
        require(sizeof(T));
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string get_string() {
        const auto size = get<std::uint32_t>();
        require(size);
        std::string out(data_.substr(pos_, size));
        pos_ += size;
        return out;
    }

    bool done() const noexcept { return pos_ == data_.size(); }
    std::size_t position() const noexcept { return pos_; }

private:
    void require(std::size_t n) const {
        if (data_.size() - pos_ < n) throw ParseError("truncated binary record");
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace mrs::detail
