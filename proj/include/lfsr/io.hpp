#ifndef LFSR_IO_HPP
#define LFSR_IO_HPP

#include "lfsr/light_field.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lfsr {

/// Decoded PNG in [0, 1]; `channels` is 1 (gray) or 3 (RGB). Alpha is dropped.
struct PngImage {
  int channels = 1;
  std::vector<Image<float>> planes;
};

PngImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const std::vector<Image<float>>& planes, int bit_depth = 8);
void write_png(const std::filesystem::path& path, const Image<float>& gray, int bit_depth = 8);

/// A scene directory: `view_MM_NN.png` files plus `meta.json`.
///
/// The networks see `luma`; `chroma` holds (Cb, Cr) when the views are RGB.
struct Scene {
  std::string name;
  LightField<float> luma;
  std::optional<std::array<LightField<float>, 2>> chroma;
  std::optional<double> disparity;
};

std::string view_filename(Index m, Index n);

Scene load_scene(const std::filesystem::path& dir);
LightField<float> load_lightfield(const std::filesystem::path& dir);
void save_scene(const std::filesystem::path& dir, const Scene& scene, int bit_depth = 8);

/// Named float32 tensor as stored in a container file.
struct TensorRecord {
  std::string name;
  Shape4 shape{0, 0, 0, 0};
  std::vector<float> values;
};

/// Binary container: 8-byte little-endian header length, a JSON header with
/// `format_version`, caller metadata under `meta` and a `tensors` table of
/// name/shape/offset/count, then contiguous little-endian float32 payload.
struct Container {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(const std::string& name) const;
};

inline constexpr int kContainerFormatVersion = 1;

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

/// Single-array form of the container used for golden data.
void write_array(const std::filesystem::path& path, const Tensor4<float>& t);
Tensor4<float> read_array(const std::filesystem::path& path);

}  // namespace lfsr

#endif  // LFSR_IO_HPP
