#pragma once

#include "choreo/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace choreo {

// L2D1 layout: "L2D1", u32 LE channels, u32 LE frames, channels*frames f32 LE
// in channel-major order.

void write_l2d(std::ostream& out, const Tensor& tensor);
Tensor read_l2d(std::istream& in);

void write_l2d(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_l2d(const std::filesystem::path& path);

namespace detail {
void write_u32(std::ostream& out, std::uint32_t value);
std::uint32_t read_u32(std::istream& in);
}  // namespace detail

}  // namespace choreo
