// SPDX-License-Identifier: Apache-2.0
#include "dgen/dgt1.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace dgen {

namespace {

constexpr char kMagic[4] = {'D', 'G', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw FormatError("dgt1: truncated header");
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw FormatError("dgt1: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

void read_magic(std::istream& is, const std::filesystem::path& path) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("dgt1: bad magic in " + path.string());
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("dgt1: cannot open " + path.string() + " for writing");
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("dgt1: cannot open " + path.string());
    return is;
}

}  // namespace

void write_dgt1(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream os = open_out(path);
    os.write(kMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(t.order()));
    for (std::size_t e : t.shape()) put_u32(os, static_cast<std::uint32_t>(e));
    for (double v : t.data()) put_f64(os, v);
    if (!os) throw FormatError("dgt1: write failed for " + path.string());
}

Tensor read_dgt1(const std::filesystem::path& path) {
    std::ifstream is = open_in(path);
    read_magic(is, path);
    std::uint32_t order = get_u32(is);
    if (order == 0 || order > 32) {
        throw FormatError("dgt1: implausible order in " + path.string());
    }
    std::vector<std::size_t> shape(order);
    std::size_t count = 1;
    for (std::uint32_t k = 0; k < order; ++k) {
        std::uint32_t e = get_u32(is);
        if (e == 0) throw FormatError("dgt1: zero extent in " + path.string());
        shape[k] = e;
        if (count > std::numeric_limits<std::size_t>::max() / e) {
            throw FormatError("dgt1: extent overflow in " + path.string());
        }
        count *= e;
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = get_f64(is);
    is.peek();
    if (!is.eof()) throw FormatError("dgt1: trailing bytes in " + path.string());
    return Tensor(std::move(shape), std::move(data));
}

void write_dgt1_labels(const std::filesystem::path& path,
                       const std::vector<std::uint32_t>& labels) {
    std::ofstream os = open_out(path);
    os.write(kMagic, 4);
    put_u32(os, 1);
    put_u32(os, static_cast<std::uint32_t>(labels.size()));
    for (std::uint32_t v : labels) put_u32(os, v);
    if (!os) throw FormatError("dgt1: write failed for " + path.string());
}

std::vector<std::uint32_t> read_dgt1_labels(const std::filesystem::path& path) {
    std::ifstream is = open_in(path);
    read_magic(is, path);
    std::uint32_t order = get_u32(is);
    if (order != 1) throw FormatError("dgt1: label file must be order-1: " + path.string());
    std::uint32_t count = get_u32(is);
    std::vector<std::uint32_t> labels(count);
    for (std::uint32_t i = 0; i < count; ++i) labels[i] = get_u32(is);
    if (!is) throw FormatError("dgt1: truncated labels in " + path.string());
    is.peek();
    if (!is.eof()) throw FormatError("dgt1: trailing bytes in " + path.string());
    return labels;
}

}  // namespace dgen
