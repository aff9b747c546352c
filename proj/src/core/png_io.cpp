#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <system_error>

#include "degradelab/error.hpp"
#include "degradelab/image.hpp"

namespace degradelab {

namespace fs = std::filesystem;

Image load_png(const fs::path& path) {
  if (!fs::exists(path)) throw_io("no such file: " + path.string());

  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw_io("cannot read PNG " + path.string() + ": " + msg);
  }
  const png_uint_32 fmt = img.format;
  if ((fmt & PNG_FORMAT_FLAG_COLOR) == 0 || (fmt & PNG_FORMAT_FLAG_ALPHA)) {
    png_image_free(&img);
    throw_io("unsupported channel count in " + path.string() +
             " (expected 8-bit RGB)");
  }
  if (fmt & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&img);
    throw_io("unsupported bit depth in " + path.string() +
             " (expected 8-bit RGB)");
  }
  img.format = PNG_FORMAT_RGB;
  const int w = static_cast<int>(img.width);
  const int h = static_cast<int>(img.height);
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw_io("truncated or corrupt PNG " + path.string() + ": " + msg);
  }

  Image out(h, w, ValueDomain::Byte);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const png_byte* px = &buf[(static_cast<std::size_t>(y) * w + x) * 3];
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = px[c];
    }
  }
  return out;
}

void save_png(const Image& image, const fs::path& path) {
  const Image byte = to_byte(image);
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::vector<png_byte> buf(byte.plane_size() * 3);
  for (int y = 0; y < byte.height; ++y) {
    for (int x = 0; x < byte.width; ++x) {
      png_byte* px = &buf[(static_cast<std::size_t>(y) * byte.width + x) * 3];
      for (int c = 0; c < 3; ++c) {
        const double v = std::floor(byte.at(c, y, x) + 0.5);
        px[c] = static_cast<png_byte>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(byte.width);
  img.height = static_cast<png_uint_32>(byte.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0,
                               nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw_io("cannot write PNG " + path.string() + ": " + msg);
  }
}

std::vector<fs::path> list_png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw_io("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<Image> load_png_dir(const fs::path& dir) {
  std::vector<Image> out;
  for (const auto& f : list_png_files(dir)) out.push_back(load_png(f));
  if (out.empty()) throw_io("no PNG files in " + dir.string());
  return out;
}

}  // namespace degradelab
