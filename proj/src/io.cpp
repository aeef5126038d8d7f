#include "lfsr/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace lfsr {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open " + path.string());
  return f;
}

}  // namespace

PngImage read_png(const fs::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("invalid PNG file: " + path.string());
  }
  png_init_io(png, file.get());
  png_read_png(png, info, PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_PACKING, nullptr);
  const Index w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  png_bytepp rows = png_get_rows(png, info);

  PngImage img;
  img.channels = channels >= 3 ? 3 : 1;
  img.planes.assign(static_cast<std::size_t>(img.channels), Image<float>(h, w));
  const float scale = depth == 16 ? 65535.0f : 255.0f;
  for (Index y = 0; y < h; ++y) {
    const png_bytep row = rows[y];
    for (Index x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const Index i = x * channels + c;
        const unsigned v = depth == 16 ? (static_cast<unsigned>(row[2 * i]) << 8) | row[2 * i + 1] : row[i];
        img.planes[static_cast<std::size_t>(c)](y, x) = static_cast<float>(v) / scale;
      }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const fs::path& path, const std::vector<Image<float>>& planes, int bit_depth) {
  if (planes.size() != 1 && planes.size() != 3) throw Error("write_png: need 1 or 3 planes");
  if (bit_depth != 8 && bit_depth != 16) throw Error("write_png: bit depth must be 8 or 16");
  const Index h = planes[0].rows(), w = planes[0].cols();
  const int channels = static_cast<int>(planes.size());
  const int bytes = bit_depth / 8;
  std::vector<png_byte> buffer(static_cast<std::size_t>(h * w * channels * bytes));
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        const double v = std::clamp<double>(planes[static_cast<std::size_t>(c)](y, x), 0.0, 1.0);
        const auto q = static_cast<unsigned>(std::lround(v * maxv));
        const std::size_t i = static_cast<std::size_t>(((y * w + x) * channels + c) * bytes);
        if (bytes == 2) {
          buffer[i] = static_cast<png_byte>(q >> 8);
          buffer[i + 1] = static_cast<png_byte>(q & 0xff);
        } else {
          buffer[i] = static_cast<png_byte>(q);
        }
      }

  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed to write PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Index y = 0; y < h; ++y) png_write_row(png, buffer.data() + y * w * channels * bytes);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_png(const fs::path& path, const Image<float>& gray, int bit_depth) {
  write_png(path, std::vector<Image<float>>{gray}, bit_depth);
}

std::string view_filename(Index m, Index n) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "view_%02lld_%02lld.png", static_cast<long long>(m), static_cast<long long>(n));
  return buf;
}

namespace {

fs::path find_view(const fs::path& dir, Index m, Index n) {
  fs::path padded = dir / view_filename(m, n);
  if (fs::exists(padded)) return padded;
  fs::path plain = dir / ("view_" + std::to_string(m) + "_" + std::to_string(n) + ".png");
  if (fs::exists(plain)) return plain;
  throw Error("incomplete light field: (" + std::to_string(m) + "," + std::to_string(n) + ")");
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

Scene load_scene(const fs::path& dir) {
  const auto meta = read_json(dir / "meta.json");
  for (const char* key : {"M", "N", "H", "W"})
    if (!meta.contains(key)) throw Error("meta.json missing key " + std::string(key));
  const Index m_rows = meta["M"].get<Index>(), n_cols = meta["N"].get<Index>();
  const Index h = meta["H"].get<Index>(), w = meta["W"].get<Index>();

  Scene scene;
  scene.name = meta.value("name", dir.filename().string());
  if (meta.contains("disparity") && meta["disparity"].is_number()) scene.disparity = meta["disparity"].get<double>();
  scene.luma = LightField<float>(m_rows, n_cols, h, w);
  std::optional<int> channels;
  for (Index m = 0; m < m_rows; ++m)
    for (Index n = 0; n < n_cols; ++n) {
      const fs::path file = find_view(dir, m, n);
      PngImage img = read_png(file);
      if (img.planes[0].rows() != h || img.planes[0].cols() != w)
        throw Error("dimension mismatch in " + file.string() + ": expected " + std::to_string(h) + "x" +
                    std::to_string(w));
      if (channels && *channels != img.channels) throw Error("channel count mismatch in " + file.string());
      if (!channels) {
        channels = img.channels;
        if (img.channels == 3)
          scene.chroma = std::array<LightField<float>, 2>{LightField<float>(m_rows, n_cols, h, w),
                                                          LightField<float>(m_rows, n_cols, h, w)};
      }
      if (img.channels == 3) {
        const auto ycc = ycbcr_split<float>({img.planes[0], img.planes[1], img.planes[2]});
        scene.luma.view({m, n}) = ycc[0];
        (*scene.chroma)[0].view({m, n}) = ycc[1];
        (*scene.chroma)[1].view({m, n}) = ycc[2];
      } else {
        scene.luma.view({m, n}) = img.planes[0];
      }
    }
  scene.luma.data().array() = scene.luma.data().array().max(0.0f).min(1.0f);
  return scene;
}

LightField<float> load_lightfield(const fs::path& dir) { return load_scene(dir).luma; }

void save_scene(const fs::path& dir, const Scene& scene, int bit_depth) {
  fs::create_directories(dir);
  const auto& lf = scene.luma;
  for (Index m = 0; m < lf.angular_rows(); ++m)
    for (Index n = 0; n < lf.angular_cols(); ++n) {
      const fs::path file = dir / view_filename(m, n);
      if (scene.chroma) {
        const auto rgb = ycbcr_merge<float>({Image<float>(lf.view({m, n})), Image<float>((*scene.chroma)[0].view({m, n})),
                                             Image<float>((*scene.chroma)[1].view({m, n}))});
        write_png(file, std::vector<Image<float>>{rgb[0], rgb[1], rgb[2]}, bit_depth);
      } else {
        write_png(file, Image<float>(lf.view({m, n})), bit_depth);
      }
    }
  nlohmann::json meta = {{"M", lf.angular_rows()}, {"N", lf.angular_cols()}, {"H", lf.height()},
                         {"W", lf.width()},        {"name", scene.name}};
  if (scene.disparity) meta["disparity"] = *scene.disparity;
  std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
}

// Container.

const TensorRecord* Container::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

namespace {

template <typename T>
T to_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

}  // namespace

void write_container(const fs::path& path, const Container& c) {
  nlohmann::json header;
  header["format_version"] = kContainerFormatVersion;
  header["meta"] = c.meta;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : c.tensors) {
    const auto count = static_cast<std::uint64_t>(t.shape[0] * t.shape[1] * t.shape[2] * t.shape[3]);
    if (count != t.values.size()) throw Error("write_container: tensor " + t.name + " shape/value count mismatch");
    header["tensors"].push_back({{"name", t.name},
                                 {"shape", {t.shape[0], t.shape[1], t.shape[2], t.shape[3]}},
                                 {"offset", offset},
                                 {"count", count}});
    offset += count;
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  const std::uint64_t len = to_little_endian(static_cast<std::uint64_t>(text.size()));
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : c.tensors)
    for (float v : t.values) {
      const float le = to_little_endian(v);
      out.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
  if (!out) throw Error("write failed: " + path.string());
}

Container read_container(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const auto file_size = static_cast<std::uint64_t>(fs::file_size(path));
  std::uint64_t len = 0;
  if (file_size < sizeof len) throw Error("container truncated: " + path.string());
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  len = to_little_endian(len);
  if (len > file_size - sizeof len) throw Error("container truncated: " + path.string());
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error("container header is not valid JSON: " + std::string(e.what()));
  }
  if (header.value("format_version", -1) != kContainerFormatVersion)
    throw Error("unsupported container format_version " + header.value("format_version", nlohmann::json()).dump());

  Container c;
  c.meta = header.value("meta", nlohmann::json::object());
  std::uint64_t expected_offset = 0;
  for (const auto& entry : header.at("tensors")) {
    TensorRecord t;
    t.name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<Index>>();
    if (shape.size() != 4) throw Error("tensor " + t.name + ": shape must have 4 dims");
    t.shape = {shape[0], shape[1], shape[2], shape[3]};
    const auto count = entry.at("count").get<std::uint64_t>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    if (static_cast<std::uint64_t>(shape[0] * shape[1] * shape[2] * shape[3]) != count)
      throw Error("tensor " + t.name + ": header shape disagrees with payload count");
    if (offset != expected_offset) throw Error("tensor " + t.name + ": payload offset out of order");
    expected_offset += count;
    c.tensors.push_back(std::move(t));
  }
  const std::uint64_t payload = file_size - sizeof len - len;
  if (payload < expected_offset * sizeof(float)) throw Error("container truncated: " + path.string());
  if (payload > expected_offset * sizeof(float)) throw Error("container has trailing bytes: " + path.string());
  for (auto& t : c.tensors) {
    t.values.resize(static_cast<std::size_t>(t.shape[0] * t.shape[1] * t.shape[2] * t.shape[3]));
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * sizeof(float)));
    for (float& v : t.values) v = to_little_endian(v);
  }
  if (!in) throw Error("container truncated: " + path.string());
  return c;
}

void write_array(const fs::path& path, const Tensor4<float>& t) {
  Container c;
  c.meta = {{"kind", "array"}};
  c.tensors.push_back({"array", t.shape(), std::vector<float>(t.data(), t.data() + t.size())});
  write_container(path, c);
}

Tensor4<float> read_array(const fs::path& path) {
  const Container c = read_container(path);
  const TensorRecord* r = c.find("array");
  if (!r) throw Error("no array in " + path.string());
  Tensor4<float> t(r->shape);
  std::copy(r->values.begin(), r->values.end(), t.data());
  return t;
}

}  // namespace lfsr
