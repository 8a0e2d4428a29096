#pragma once

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "artmap/raster.hpp"

// PNG/JPEG decode and encode. Loading always yields a 3-channel RGB raster in
// [0,1]: grayscale is replicated, alpha is dropped. Saving quantizes to 8 bit;
// PNG is the canonical (lossless) output format, JPEG is provided for
// dataset-style inputs.

namespace artmap::io {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + path.string());
  f.seekg(0, std::ios::end);
  std::streamoff n = f.tellg();
  f.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(n));
  if (n > 0) f.read(reinterpret_cast<char*>(bytes.data()), n);
  if (!f) throw std::runtime_error("cannot read file: " + path.string());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const void* data, std::size_t n) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open file for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!f) throw std::runtime_error("cannot write file: " + path.string());
}

struct JpegErrorTrap {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX] = {0};

  static void on_error(j_common_ptr cinfo) {
    auto* trap = reinterpret_cast<JpegErrorTrap*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, trap->message);
    std::longjmp(trap->jump, 1);
  }
};

inline Raster<float> decode_png(const std::vector<std::uint8_t>& bytes,
                                const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw std::runtime_error("png decode failed (" + name + "): " + image.message);
  image.format = PNG_FORMAT_RGB;  // gray -> replicated, alpha -> dropped
  if (image.width < 1 || image.height < 1) {
    png_image_free(&image);
    throw std::runtime_error("png decode failed (" + name + "): zero-dimension image");
  }
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw std::runtime_error("png decode failed (" + name + "): " + msg);
  }
  Raster<float> out(static_cast<int>(image.height), static_cast<int>(image.width), 3);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = pixels[i] / 255.0f;
  return out;
}

inline Raster<float> decode_jpeg(const std::vector<std::uint8_t>& bytes,
                                 const std::string& name) {
  jpeg_decompress_struct cinfo;
  JpegErrorTrap trap;
  std::vector<std::uint8_t> pixels;  // declared before setjmp
  cinfo.err = jpeg_std_error(&trap.pub);
  trap.pub.error_exit = JpegErrorTrap::on_error;
  if (setjmp(trap.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw std::runtime_error("jpeg decode failed (" + name + "): " + trap.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int h = static_cast<int>(cinfo.output_height);
  const int w = static_cast<int>(cinfo.output_width);
  if (h < 1 || w < 1) {
    jpeg_destroy_decompress(&cinfo);
    throw std::runtime_error("jpeg decode failed (" + name + "): zero-dimension image");
  }
  pixels.resize(static_cast<std::size_t>(h) * w * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  Raster<float> out(h, w, 3);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = pixels[i] / 255.0f;
  return out;
}

inline std::vector<std::uint8_t> quantize8(const Raster<float>& r) {
  std::vector<std::uint8_t> bytes(r.data.size());
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    float v = std::min(1.0f, std::max(0.0f, r.data[i]));
    bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return bytes;
}

inline void encode_png(const Raster<float>& r, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(r.width);
  image.height = static_cast<png_uint_32>(r.height);
  image.format = (r.channels == 1) ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes = quantize8(r);
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr))
    throw std::runtime_error("png encode failed (" + path.string() + "): " + image.message);
}

inline void encode_jpeg(const Raster<float>& r, const std::filesystem::path& path,
                        int quality = 95) {
  jpeg_compress_struct cinfo;
  JpegErrorTrap trap;
  std::vector<std::uint8_t> bytes = quantize8(r);  // declared before setjmp
  unsigned char* out_buf = nullptr;
  unsigned long out_size = 0;
  cinfo.err = jpeg_std_error(&trap.pub);
  trap.pub.error_exit = JpegErrorTrap::on_error;
  if (setjmp(trap.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (out_buf) std::free(out_buf);
    throw std::runtime_error("jpeg encode failed (" + path.string() + "): " + trap.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &out_buf, &out_size);
  cinfo.image_width = static_cast<JDIMENSION>(r.width);
  cinfo.image_height = static_cast<JDIMENSION>(r.height);
  cinfo.input_components = r.channels;
  cinfo.in_color_space = (r.channels == 1) ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = bytes.data() +
                   static_cast<std::size_t>(cinfo.next_scanline) * r.width * r.channels;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  try {
    write_file_bytes(path, out_buf, out_size);
  } catch (...) {
    std::free(out_buf);
    throw;
  }
  std::free(out_buf);
}

}  // namespace detail

// Decodes by content sniffing, not extension. Returns 3-channel RGB in [0,1].
inline Raster<float> load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("image file not found: " + path.string());
  std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' &&
      bytes[3] == 'G')
    return detail::decode_png(bytes, path.string());
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8)
    return detail::decode_jpeg(bytes, path.string());
  throw std::runtime_error("unsupported image format (not PNG or JPEG): " +
                           path.string());
}

// Format chosen by extension: .png, .jpg, .jpeg. Values are clamped to [0,1]
// and quantized to 8 bit.
inline void save_image(const Raster<float>& r, const std::filesystem::path& path) {
  if (r.channels != 1 && r.channels != 3)
    throw std::runtime_error("save_image: unsupported channel count " +
                             std::to_string(r.channels) + " (want 1 or 3)");
  if (r.height < 1 || r.width < 1 || r.data.size() != r.value_count())
    throw std::runtime_error("save_image: malformed raster");
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png")
    detail::encode_png(r, path);
  else if (ext == ".jpg" || ext == ".jpeg")
    detail::encode_jpeg(r, path);
  else
    throw std::runtime_error("save_image: unsupported extension '" + ext +
                             "' (want .png/.jpg/.jpeg)");
}

}  // namespace artmap::io
