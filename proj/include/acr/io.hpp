#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "acr/feature_map.hpp"
#include "acr/hand_rig.hpp"
#include "acr/types.hpp"

namespace acr {

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// Binary tensor file: "ACRT", u16 version (1), u16 ndim, ndim x u32 dims,
// then row-major float32 payload. Everything little-endian.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
  bool operator==(const Tensor&) const = default;
};

inline constexpr std::uint16_t kTensorVersion = 1;

std::string encode_tensor(const Tensor& tensor);
// Throws FormatError on a bad magic, version or payload length.
Tensor decode_tensor(std::string_view bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

// A map stack is one 471 x H x W tensor: param, center, part, cross channels.
Tensor tensor_from_stack(const MapStack& stack);
MapStack stack_from_tensor(const Tensor& tensor);

// "v x y z" lines then 1-based "f a b c" lines. Coordinates are written as
// float32 with enough digits to round-trip.
std::string encode_obj(const Mesh& vertices, const Faces& faces);
struct ObjMesh {
  Mesh vertices;
  Faces faces;
};
ObjMesh decode_obj(std::string_view text);

// Binary P5 greymap, maxval 255, round(clamp(v, 0, 1) * 255).
std::string encode_pgm(const Eigen::Ref<const Eigen::RowVectorXd>& values, int height, int width);

}  // namespace acr
