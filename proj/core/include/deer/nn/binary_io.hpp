#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "deer/nn/tensor.hpp"

namespace deer::nn {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

/// Append-only little-endian byte sink.
class ByteWriter {
public:
    template <typename T>
    void put(T value) {
        char buf[sizeof(T)];
        std::memcpy(buf, &value, sizeof(T));
        bytes_.append(buf, sizeof(T));
    }

    void put_string(const std::string& s) {
        put<std::uint64_t>(s.size());
        bytes_ += s;
    }

    void put_doubles(const double* data, std::size_t n) {
        bytes_.append(reinterpret_cast<const char*>(data), n * sizeof(double));
    }

    void put_vector(const Vector& v) {
        put<std::uint32_t>(static_cast<std::uint32_t>(v.size()));
        put_doubles(v.data(), static_cast<std::size_t>(v.size()));
    }

    void put_raw(const char* data, std::size_t n) { bytes_.append(data, n); }

    const std::string& bytes() const { return bytes_; }
    std::string take() { return std::move(bytes_); }

private:
    std::string bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string get_string() {
        const auto n = get<std::uint64_t>();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    void get_doubles(double* out, std::size_t n) {
        need(n * sizeof(double));
        std::memcpy(out, bytes_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
    }

    Vector get_vector() {
        Vector v(get<std::uint32_t>());
        get_doubles(v.data(), static_cast<std::size_t>(v.size()));
        return v;
    }

    /// Consumes `n` bytes and checks they equal `expected`.
    void expect(const char* expected, std::size_t n, const char* what) {
        need(n);
        if (std::memcmp(bytes_.data() + pos_, expected, n) != 0) throw std::runtime_error(std::string(what) + ": bad magic");
        pos_ += n;
    }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("truncated binary data");
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

/// splitmix64 finalizer; derives independent seeds for numbered streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace deer::nn
