#ifndef AMSELAB_IO_ARTIFACT_HPP
#define AMSELAB_IO_ARTIFACT_HPP

// Binary artifact files:
//   "AMSELAB1" | u32 version | u32 kind | u32 N, M, L, r, frames
//   | payload of f64 values | u32 CRC-32 of the payload bytes
// All integers and floats little-endian; complex values are (re, im) pairs
// and matrices are row-major.

#include "amselab/numerics/types.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace amselab {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::array<char, 8> kArtifactMagic{'A', 'M', 'S', 'E', 'L', 'A', 'B', '1'};
inline constexpr std::uint32_t kArtifactVersion = 1;
inline constexpr std::size_t kArtifactHeaderBytes = 8 + 4 + 4 + 5 * 4;

enum class ArtifactKind : std::uint32_t { dataset = 1, checkpoint = 2, filter = 3 };

inline std::string to_string(ArtifactKind k) {
    switch (k) {
        case ArtifactKind::dataset: return "dataset";
        case ArtifactKind::checkpoint: return "checkpoint";
        case ArtifactKind::filter: return "filter";
    }
    return "unknown";
}

struct ArtifactHeader {
    ArtifactKind kind = ArtifactKind::filter;
    std::uint32_t n = 0, m = 0, l = 0, r = 0, frames = 0;

    friend bool operator==(const ArtifactHeader&, const ArtifactHeader&) = default;
};

struct Artifact {
    ArtifactHeader header;
    std::vector<double> payload;
};

inline std::uint32_t payload_crc32(const std::vector<double>& payload);

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_f64(std::string& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

inline double get_f64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

inline std::string payload_bytes(const std::vector<double>& payload) {
    std::string bytes;
    bytes.reserve(payload.size() * 8);
    for (double d : payload) put_f64(bytes, d);
    return bytes;
}

inline std::uint32_t crc32_bytes(const std::string& bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), chunk);
        off += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

inline std::uint32_t payload_crc32(const std::vector<double>& payload) {
    return detail::crc32_bytes(detail::payload_bytes(payload));
}

inline std::string encode_artifact(const Artifact& a) {
    std::string out(kArtifactMagic.begin(), kArtifactMagic.end());
    detail::put_u32(out, kArtifactVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(a.header.kind));
    for (std::uint32_t v : {a.header.n, a.header.m, a.header.l, a.header.r, a.header.frames}) detail::put_u32(out, v);
    const std::string body = detail::payload_bytes(a.payload);
    out += body;
    detail::put_u32(out, detail::crc32_bytes(body));
    return out;
}

inline Artifact decode_artifact(const std::string& bytes) {
    if (bytes.size() < kArtifactHeaderBytes + 4) throw IntegrityError("artifact: file too short");
    if (!std::equal(kArtifactMagic.begin(), kArtifactMagic.end(), bytes.begin()))
        throw IntegrityError("artifact: bad magic");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t version = detail::get_u32(p + 8);
    if (version != kArtifactVersion)
        throw IntegrityError("artifact: unsupported format version " + std::to_string(version));
    const std::uint32_t kind = detail::get_u32(p + 12);
    if (kind < 1 || kind > 3) throw IntegrityError("artifact: unknown kind tag " + std::to_string(kind));
    Artifact a;
    a.header.kind = static_cast<ArtifactKind>(kind);
    a.header.n = detail::get_u32(p + 16);
    a.header.m = detail::get_u32(p + 20);
    a.header.l = detail::get_u32(p + 24);
    a.header.r = detail::get_u32(p + 28);
    a.header.frames = detail::get_u32(p + 32);
    const std::size_t body = bytes.size() - kArtifactHeaderBytes - 4;
    if (body % 8 != 0) throw IntegrityError("artifact: payload is not a whole number of doubles");
    const std::uint32_t stored = detail::get_u32(p + bytes.size() - 4);
    if (detail::crc32_bytes(bytes.substr(kArtifactHeaderBytes, body)) != stored)
        throw IntegrityError("checksum mismatch");
    a.payload.resize(body / 8);
    for (std::size_t i = 0; i < a.payload.size(); ++i) a.payload[i] = detail::get_f64(p + kArtifactHeaderBytes + 8 * i);
    return a;
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write to '" + path + "' failed");
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read from '" + path + "' failed");
    return bytes;
}

inline void save_artifact(const std::string& path, const Artifact& a) { write_file(path, encode_artifact(a)); }

inline Artifact load_artifact(const std::string& path) { return decode_artifact(read_file(path)); }

/// Sequential f64 payload builder.
class PayloadWriter {
public:
    void put(double v) { data_.push_back(v); }
    void put_int(std::int64_t v) {
        if (v > (std::int64_t{1} << 53) || v < -(std::int64_t{1} << 53))
            throw ConfigError("artifact: integer outside the exact double range");
        data_.push_back(static_cast<double>(v));
    }
    /// 64-bit values are split into two exact 32-bit halves.
    void put_u64(std::uint64_t v) {
        data_.push_back(static_cast<double>(v >> 32));
        data_.push_back(static_cast<double>(v & 0xFFFFFFFFu));
    }
    void put_string(const std::string& s) {
        put_int(static_cast<std::int64_t>(s.size()));
        for (unsigned char c : s) data_.push_back(static_cast<double>(c));
    }
    template <typename M>
    void put_matrix(const M& m) {
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j) data_.push_back(m(i, j));
    }
    /// Shape-prefixed real matrix.
    template <typename M>
    void put_shaped(const M& m) {
        put_int(m.rows());
        put_int(m.cols());
        put_matrix(m);
    }
    void put_cmatrix(const CMatrix& m) {
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j) {
                data_.push_back(m(i, j).real());
                data_.push_back(m(i, j).imag());
            }
    }
    void put_cvector(const CVector& v) {
        for (Index i = 0; i < v.size(); ++i) {
            data_.push_back(v(i).real());
            data_.push_back(v(i).imag());
        }
    }

    std::vector<double> take() { return std::move(data_); }

private:
    std::vector<double> data_;
};

/// Sequential reader; running past the end is an integrity error.
class PayloadReader {
public:
    explicit PayloadReader(const std::vector<double>& data) : data_(data) {}

    double get() {
        if (pos_ >= data_.size()) throw IntegrityError("artifact: payload shorter than its header implies");
        return data_[pos_++];
    }
    std::int64_t get_int() {
        const double d = get();
        const auto v = static_cast<std::int64_t>(d);
        if (static_cast<double>(v) != d) throw IntegrityError("artifact: expected an integer field");
        return v;
    }
    std::uint64_t get_u64() {
        const std::int64_t hi = get_int(), lo = get_int();
        if (hi < 0 || lo < 0 || hi > 0xFFFFFFFF || lo > 0xFFFFFFFF) throw IntegrityError("artifact: bad 64-bit field");
        return (static_cast<std::uint64_t>(hi) << 32) | static_cast<std::uint64_t>(lo);
    }
    std::string get_string() {
        const std::int64_t n = get_int();
        if (n < 0 || static_cast<std::size_t>(n) > remaining()) throw IntegrityError("artifact: bad string length");
        std::string s;
        for (std::int64_t i = 0; i < n; ++i) s.push_back(static_cast<char>(get_int()));
        return s;
    }
    Matrix get_matrix(Index rows, Index cols) {
        if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) > remaining())
            throw IntegrityError("artifact: matrix " + shape_str(rows, cols) + " overruns the payload");
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) m(i, j) = get();
        return m;
    }
    Matrix get_shaped() {
        const std::int64_t r = get_int(), c = get_int();
        return get_matrix(r, c);
    }
    CMatrix get_cmatrix(Index rows, Index cols) {
        if (rows < 0 || cols < 0 || static_cast<std::size_t>(2 * rows * cols) > remaining())
            throw IntegrityError("artifact: complex matrix " + shape_str(rows, cols) + " overruns the payload");
        CMatrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) {
                const double re = get();
                m(i, j) = cdouble(re, get());
            }
        return m;
    }
    CVector get_cvector(Index n) {
        const CMatrix m = get_cmatrix(n, 1);
        return m.col(0);
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    void expect_end() const {
        if (pos_ != data_.size())
            throw IntegrityError("artifact: " + std::to_string(data_.size() - pos_) + " unexpected trailing values");
    }

private:
    const std::vector<double>& data_;
    std::size_t pos_ = 0;
};

}  // namespace amselab

#endif  // AMSELAB_IO_ARTIFACT_HPP
