#include "irstd/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "irstd/error.hpp"

namespace irstd::io {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports through these instead of stderr; the message ends up in the thrown error.
struct PngMessage {
  char text[256] = {};
};

void png_on_error(png_structp png, png_const_charp msg) {
  if (auto* m = static_cast<PngMessage*>(png_get_error_ptr(png))) std::snprintf(m->text, sizeof m->text, "%s", msg);
  png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

GrayImage read_png(const fs::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw LoadError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw LoadError("not a PNG file: " + path.string());

  PngMessage msg;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &msg, png_on_error, png_on_warning);
  if (!png) throw LoadError("libpng init failed for " + path.string());
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw LoadError("libpng init failed for " + path.string());
  }

  // Everything allocated after setjmp must be released on the error path.
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  volatile int height = 0, width = 0, depth = 0;  // live across setjmp
  std::string failure;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError("corrupted PNG: " + path.string() + " (" + msg.text + ")");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    failure = "PNG is not single-channel grayscale: ";
  } else {
    if (depth < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
      depth = 8;
    }
    png_read_update_info(png, info);
    height = static_cast<int>(png_get_image_height(png, info));
    width = static_cast<int>(png_get_image_width(png, info));
    const std::size_t stride = png_get_rowbytes(png, info);
    raw.resize(stride * static_cast<std::size_t>(height));
    rows.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) rows[y] = raw.data() + stride * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!failure.empty()) throw LoadError(failure + path.string());

  std::vector<double> data(static_cast<std::size_t>(height) * width);
  const std::size_t stride = raw.size() / height;
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = raw.data() + stride * y;
    for (int x = 0; x < width; ++x) {
      double v = depth == 16 ? ((row[2 * x] << 8) | row[2 * x + 1]) / 65535.0 : row[x] / 255.0;
      data[static_cast<std::size_t>(y) * width + x] = v;
    }
  }
  return GrayImage(height, width, std::move(data));
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
bool next_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return true;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return !tok.empty();
}

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::string magic, ws, hs, ms;
  if (!next_token(in, magic) || magic != "P5") throw LoadError("not a binary PGM (P5): " + path.string());
  if (!next_token(in, ws) || !next_token(in, hs) || !next_token(in, ms))
    throw LoadError("truncated PGM header: " + path.string());
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(ws);
    height = std::stoi(hs);
    maxval = std::stoi(ms);
  } catch (const std::exception&) {
    throw LoadError("malformed PGM header: " + path.string());
  }
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535)
    throw LoadError("invalid PGM header values: " + path.string());
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(width) * height * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw LoadError("truncated PGM data: " + path.string());
  std::vector<double> data(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int v = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
    data[i] = std::min(1.0, static_cast<double>(v) / maxval);
  }
  return GrayImage(height, width, std::move(data));
}

std::vector<std::uint8_t> quantize(const GrayImage& img, BitDepth depth) {
  const bool wide = depth == BitDepth::Sixteen;
  const double scale = wide ? 65535.0 : 255.0;
  std::vector<std::uint8_t> out(img.size() * (wide ? 2 : 1));
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(px[i], 0.0, 1.0) * scale));
    if (wide) {
      out[2 * i] = static_cast<std::uint8_t>(q >> 8);
      out[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
    } else {
      out[i] = static_cast<std::uint8_t>(q);
    }
  }
  return out;
}

void write_png(const fs::path& path, int height, int width, int depth, const std::vector<std::uint8_t>& raw) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  PngMessage msg;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &msg, png_on_error, png_on_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng init failed for " + path.string());
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  const std::size_t stride = static_cast<std::size_t>(width) * (depth / 8);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(raw.data() + stride * y);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encode failed for " + path.string() + " (" + msg.text + ")");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_pgm(const fs::path& path, int height, int width, int depth, const std::vector<std::uint8_t>& raw) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << '\n' << (depth == 16 ? 65535 : 255) << '\n';
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void write_raw(const fs::path& path, int height, int width, int depth, const std::vector<std::uint8_t>& raw) {
  const std::string ext = lower_ext(path);
  if (ext == ".png")
    write_png(path, height, width, depth, raw);
  else if (ext == ".pgm")
    write_pgm(path, height, width, depth, raw);
  else
    throw std::invalid_argument("unsupported image extension: " + path.string());
}

}  // namespace

GrayImage read_image(const fs::path& path) {
  if (!fs::exists(path)) throw LoadError("missing file: " + path.string());
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw LoadError("unsupported image extension: " + path.string());
}

BinaryMask read_mask(const fs::path& path) {
  const GrayImage img = read_image(path);
  BinaryMask mask(img.height(), img.width());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) mask.set(i, px[i] > 0.0);
  return mask;
}

void write_image(const fs::path& path, const GrayImage& img, BitDepth depth) {
  write_raw(path, img.height(), img.width(), static_cast<int>(depth), quantize(img, depth));
}

void write_mask(const fs::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> raw(mask.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = mask.get(i) ? 255 : 0;
  write_raw(path, mask.height(), mask.width(), 8, raw);
}

}  // namespace irstd::io
