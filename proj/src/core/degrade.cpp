#include "degradelab/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

#include "degradelab/error.hpp"
#include "degradelab/parallel.hpp"

namespace degradelab {

namespace fs = std::filesystem;

namespace {

int extend_index(int i, int n, Boundary b) {
  if (b == Boundary::Periodic) {
    const int m = i % n;
    return m < 0 ? m + n : m;
  }
  // Half-sample symmetric with period 2n.
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

// Index table: rows of `taps` input indices for every output sample.
std::vector<int> axis_table(int out_len, int stride, int pad, int taps, int n,
                            Boundary b) {
  std::vector<int> table(static_cast<std::size_t>(out_len) * taps);
  for (int o = 0; o < out_len; ++o)
    for (int t = 0; t < taps; ++t)
      table[o * taps + t] = extend_index(o * stride + t - pad, n, b);
  return table;
}

void check_kernel_fits(const Image& image, const Kernel2D& kernel) {
  if (kernel.size() > image.height || kernel.size() > image.width) {
    throw_invalid("kernel of size " + std::to_string(kernel.size()) +
                  " is larger than the " + std::to_string(image.height) + "x" +
                  std::to_string(image.width) + " image");
  }
}

// Strided correlation over extended borders; the workhorse of convolve2d and
// degrade.
Image strided_correlate(const Image& image, const Kernel2D& kernel, int stride,
                        int pad, int out_h, int out_w, Boundary b) {
  const int p = kernel.size();
  const auto rows = axis_table(out_h, stride, pad, p, image.height, b);
  const auto cols = axis_table(out_w, stride, pad, p, image.width, b);
  Image out(out_h, out_w, image.domain);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int i = 0; i < out_h; ++i) {
      for (int j = 0; j < out_w; ++j) {
        double acc = 0.0;
        for (int r = 0; r < p; ++r) {
          const double* src = image.row(c, rows[i * p + r]);
          const int* ci = &cols[j * p];
          for (int q = 0; q < p; ++q) acc += kernel(r, q) * src[ci[q]];
        }
        out.at(c, i, j) = acc;
      }
    }
  }
  return out;
}

}  // namespace

int degrade_padding(int kernel_size, int scale) {
  if (scale < 1) throw_invalid("scale must be >= 1");
  if ((kernel_size - scale) % 2 != 0) {
    throw_invalid("kernel size " + std::to_string(kernel_size) +
                  " and scale " + std::to_string(scale) +
                  " cannot be aligned: (p - s) must be even");
  }
  return (kernel_size - scale) / 2;
}

Image convolve2d(const Image& image, const Kernel2D& kernel, Boundary boundary,
                 int scale) {
  check_kernel_fits(image, kernel);
  if (boundary == Boundary::Valid) {
    const int p = kernel.size();
    return strided_correlate(image, kernel, 1, 0, image.height - p + 1,
                             image.width - p + 1, boundary);
  }
  const int pad = degrade_padding(kernel.size(), scale);
  return strided_correlate(image, kernel, 1, pad, image.height, image.width,
                           boundary);
}

Image decimate(const Image& image, int scale, Phase phase) {
  if (scale < 1) throw_invalid("decimation factor must be >= 1");
  if (image.height % scale != 0 || image.width % scale != 0) {
    throw_invalid("image " + std::to_string(image.height) + "x" +
                  std::to_string(image.width) + " is not divisible by " +
                  std::to_string(scale));
  }
  if (phase.y < 0 || phase.y >= scale || phase.x < 0 || phase.x >= scale) {
    throw_invalid("decimation phase out of range");
  }
  Image out(image.height / scale, image.width / scale, image.domain);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int i = 0; i < out.height; ++i)
      for (int j = 0; j < out.width; ++j)
        out.at(c, i, j) = image.at(c, scale * i + phase.y, scale * j + phase.x);
  return out;
}

Image degrade(const Image& image, const Kernel2D& kernel, int scale,
              Boundary boundary) {
  if (boundary == Boundary::Valid) {
    throw_invalid("degrade requires a padded boundary mode");
  }
  check_kernel_fits(image, kernel);
  if (image.height % scale != 0 || image.width % scale != 0) {
    throw_invalid("image " + std::to_string(image.height) + "x" +
                  std::to_string(image.width) + " is not divisible by " +
                  std::to_string(scale));
  }
  const int pad = degrade_padding(kernel.size(), scale);
  return strided_correlate(image, kernel, scale, pad, image.height / scale,
                           image.width / scale, boundary);
}

Image degrade_adjoint(const Image& grad_out, const Kernel2D& kernel, int scale,
                      int height, int width, Boundary boundary) {
  if (boundary == Boundary::Valid) {
    throw_invalid("degrade_adjoint requires a padded boundary mode");
  }
  if (grad_out.height * scale != height || grad_out.width * scale != width) {
    throw_invalid("degrade_adjoint: gradient shape does not match scale");
  }
  const int p = kernel.size();
  const int pad = degrade_padding(p, scale);
  const auto rows = axis_table(grad_out.height, scale, pad, p, height, boundary);
  const auto cols = axis_table(grad_out.width, scale, pad, p, width, boundary);
  Image out(height, width, grad_out.domain);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int i = 0; i < grad_out.height; ++i) {
      for (int j = 0; j < grad_out.width; ++j) {
        const double g = grad_out.at(c, i, j);
        if (g == 0.0) continue;
        for (int r = 0; r < p; ++r) {
          double* dst = &out.at(c, rows[i * p + r], 0);
          const int* ci = &cols[j * p];
          for (int q = 0; q < p; ++q) dst[ci[q]] += kernel(r, q) * g;
        }
      }
    }
  }
  return out;
}

Image upsample_bicubic(const Image& image, int factor) {
  if (factor < 1) throw_invalid("upsampling factor must be >= 1");
  if (factor == 1) return image;
  struct Tap {
    int index[4];
    double weight[4];
  };
  auto make_taps = [&](int out_len, int in_len) {
    std::vector<Tap> taps(out_len);
    for (int o = 0; o < out_len; ++o) {
      const double u = (o + 0.5) / factor - 0.5;
      const int base = static_cast<int>(std::floor(u)) - 1;
      double total = 0.0;
      for (int t = 0; t < 4; ++t) {
        taps[o].index[t] = extend_index(base + t, in_len, Boundary::Reflect);
        taps[o].weight[t] = cubic_weight(u - (base + t));
        total += taps[o].weight[t];
      }
      for (double& w : taps[o].weight) w /= total;
    }
    return taps;
  };
  const int oh = image.height * factor;
  const int ow = image.width * factor;
  const auto ty = make_taps(oh, image.height);
  const auto tx = make_taps(ow, image.width);
  Image horiz(image.height, ow, image.domain);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int t = 0; t < 4; ++t)
          acc += tx[x].weight[t] * image.at(c, y, tx[x].index[t]);
        horiz.at(c, y, x) = acc;
      }
  Image out(oh, ow, image.domain);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int t = 0; t < 4; ++t)
          acc += ty[y].weight[t] * horiz.at(c, ty[y].index[t], x);
        out.at(c, y, x) = acc;
      }
  return out;
}

Image crop_to_multiple(const Image& image, int multiple) {
  const int h = image.height - image.height % multiple;
  const int w = image.width - image.width % multiple;
  if (h == 0 || w == 0) throw_invalid("image too small to crop");
  if (h == image.height && w == image.width) return image;
  return image.crop(0, 0, h, w);
}

DatasetSplit synthesize_dataset(const fs::path& hr_dir, const Kernel2D& kernel,
                                const std::string& kernel_id, int scale,
                                double split_ratio, std::uint64_t seed,
                                const fs::path& out_dir) {
  std::vector<fs::path> files = list_png_files(hr_dir);
  if (files.empty()) throw_io("no PNG files in " + hr_dir.string());
  if (files.size() < 2) {
    throw_invalid("dataset synthesis needs at least two images");
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw_invalid("split ratio must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(files.begin(), files.end(), rng);
  const std::size_t n = files.size();
  std::size_t n_hr = static_cast<std::size_t>(std::llround(split_ratio * n));
  n_hr = std::clamp<std::size_t>(n_hr, 1, n - 1);

  std::error_code ec;
  fs::create_directories(out_dir / "hr", ec);
  fs::create_directories(out_dir / "lr", ec);

  DatasetSplit split;
  split.kernel_id = kernel_id;
  split.scale = scale;
  split.entries.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool hr = i < n_hr;
    split.entries[i] = {hr ? "hr" : "lr",
                        fs::path(hr ? "hr" : "lr") / files[i].filename(),
                        files[i]};
  }
  parallel_for(n, [&](std::size_t i) {
    const DatasetEntry& e = split.entries[i];
    const fs::path dst = out_dir / e.relative_path;
    if (e.role == "hr") {
      fs::copy_file(e.source, dst, fs::copy_options::overwrite_existing);
    } else {
      const Image src = crop_to_multiple(load_png(e.source), scale);
      save_png(degrade(src, kernel, scale), dst);
    }
  });
  for (const auto& e : split.entries) {
    (e.role == "hr" ? split.hr_set : split.lr_set)
        .push_back(out_dir / e.relative_path);
  }

  std::ofstream manifest(out_dir / "manifest.tsv");
  if (!manifest) throw_io("cannot write manifest in " + out_dir.string());
  for (const auto& e : split.entries) {
    manifest << e.role << '\t' << e.relative_path.generic_string() << '\t'
             << e.source.generic_string() << '\t' << kernel_id << '\t' << scale
             << '\n';
  }
  return split;
}

std::vector<DatasetEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open manifest " + path.string());
  std::vector<DatasetEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 5) {
      throw_io(path.string() + ":" + std::to_string(lineno) +
               ": expected 5 tab-separated fields");
    }
    entries.push_back({fields[0], fields[1], fields[2]});
  }
  return entries;
}

}  // namespace degradelab
