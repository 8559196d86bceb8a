#include "evrn/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "evrn/errors.hpp"

namespace evrn {

double to_luma(double r, double g, double b)
{
  auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
  return 0.299 * clamp01(r) + 0.587 * clamp01(g) + 0.114 * clamp01(b);
}

namespace {

// Skips whitespace and '#' comment lines between PGM header tokens.
bool next_pgm_token(std::istream& in, std::string& tok)
{
  tok.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return !tok.empty();
}

Frame load_pgm(std::ifstream& in, const std::string& path)
{
  std::string tok;
  if (!next_pgm_token(in, tok) || tok != "P5") {
    throw FormatError(path + ": not a binary PGM (P5) file");
  }
  long w = 0, h = 0, maxval = 0;
  try {
    if (!next_pgm_token(in, tok)) throw FormatError("");
    w = std::stol(tok);
    if (!next_pgm_token(in, tok)) throw FormatError("");
    h = std::stol(tok);
    if (!next_pgm_token(in, tok)) throw FormatError("");
    maxval = std::stol(tok);
  } catch (const std::exception&) {
    throw FormatError(path + ": truncated or malformed PGM header");
  }
  if (w <= 0 || h <= 0) {
    throw FormatError(path + ": invalid PGM dimensions");
  }
  if (maxval != 255) {
    throw FormatError(path + ": unsupported PGM maxval " + std::to_string(maxval) +
                      " (only 8-bit, maxval 255)");
  }
  std::vector<uint8_t> bytes(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<size_t>(in.gcount()) != bytes.size()) {
    throw FormatError(path + ": truncated PGM pixel data");
  }
  Frame f(static_cast<int>(h), static_cast<int>(w));
  for (size_t i = 0; i < bytes.size(); ++i) {
    f.data[i] = bytes[i] / 255.0;
  }
  return f;
}

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCloser()
  {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

Frame load_png(const std::string& path)
{
  PngReadCloser ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) {
    throw FormatError(path + ": cannot open file");
  }
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw FormatError(path + ": libpng init failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw FormatError(path + ": libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) {
    throw FormatError(path + ": PNG decode error");
  }
  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);

  const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
  const int depth = png_get_bit_depth(ctx.png, ctx.info);
  const int color = png_get_color_type(ctx.png, ctx.info);
  if (depth == 16) {
    throw FormatError(path + ": unsupported PNG bit depth 16 (only 8-bit)");
  }
  // Normalize everything to 8-bit gray or RGB samples.
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int channels = png_get_channels(ctx.png, ctx.info);
  if (channels != 1 && channels != 3) {
    throw FormatError(path + ": unsupported PNG channel layout");
  }
  std::vector<uint8_t> row(static_cast<size_t>(w) * channels);
  Frame f(static_cast<int>(h), static_cast<int>(w));
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(ctx.png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) {
      if (channels == 1) {
        f.at(static_cast<int>(y), static_cast<int>(x)) = row[x] / 255.0;
      } else {
        f.at(static_cast<int>(y), static_cast<int>(x)) =
            to_luma(row[3 * x] / 255.0, row[3 * x + 1] / 255.0, row[3 * x + 2] / 255.0);
      }
    }
  }
  return f;
}

}  // namespace

Frame load_frame(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError(path + ": cannot open file");
  }
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2) {
    throw FormatError(path + ": truncated header");
  }
  in.seekg(0);
  if (magic[0] == 'P' && magic[1] == '5') {
    return load_pgm(in, path);
  }
  if (static_cast<uint8_t>(magic[0]) == 0x89 && magic[1] == 'P') {
    in.close();
    return load_png(path);
  }
  throw FormatError(path + ": unrecognized image format (need P5 PGM or PNG)");
}

void save_frame(const Frame& frame, const std::string& path)
{
  if (frame.height <= 0 || frame.width <= 0) {
    throw std::invalid_argument("save_frame: empty frame");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error(path + ": cannot open for writing");
  }
  out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
  std::vector<uint8_t> bytes(frame.size());
  for (size_t i = 0; i < frame.size(); ++i) {
    bytes[i] = quantize8(frame.data[i]);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error(path + ": write failed");
  }
}

}  // namespace evrn
