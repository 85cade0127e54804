#include "choreo/tensor_io.hpp"

#include "choreo/error.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

namespace choreo {

namespace {

constexpr std::array<char, 4> kMagic{'L', '2', 'D', '1'};

}  // namespace

namespace detail {

void write_u32(std::ostream& out, std::uint32_t value) {
    std::array<char, 4> bytes{};
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
    out.write(bytes.data(), 4);
}

std::uint32_t read_u32(std::istream& in) {
    std::array<unsigned char, 4> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), 4)) {
        throw FormatError("unexpected end of stream");
    }
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return value;
}

}  // namespace detail

void write_l2d(std::ostream& out, const Tensor& tensor) {
    if (tensor.channels() > std::numeric_limits<std::uint32_t>::max() ||
        tensor.frames() > std::numeric_limits<std::uint32_t>::max()) {
        throw DimensionError("tensor too large for L2D1");
    }
    out.write(kMagic.data(), kMagic.size());
    detail::write_u32(out, static_cast<std::uint32_t>(tensor.channels()));
    detail::write_u32(out, static_cast<std::uint32_t>(tensor.frames()));
    for (float v : tensor.data()) detail::write_u32(out, std::bit_cast<std::uint32_t>(v));
    if (!out) throw IoError("failed writing L2D1 tensor");
}

Tensor read_l2d(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), 4) || magic != kMagic) {
        throw FormatError("missing L2D1 magic");
    }
    const std::uint32_t channels = detail::read_u32(in);
    const std::uint32_t frames = detail::read_u32(in);
    if (channels == 0 || frames == 0) throw FormatError("L2D1 tensor with zero dimension");
    const std::size_t count = static_cast<std::size_t>(channels) * frames;
    std::vector<float> data(count);
    for (auto& v : data) v = std::bit_cast<float>(detail::read_u32(in));
    return Tensor(channels, frames, std::move(data));
}

void write_l2d(const std::filesystem::path& path, const Tensor& tensor) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_l2d(out, tensor);
}

Tensor read_l2d(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return read_l2d(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace choreo
