#include "mapgen/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mapgen::png {

namespace {

struct WriteState {
  Bytes* out;
};

void write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* state = static_cast<WriteState*>(png_get_io_ptr(png));
  state->out->insert(state->out->end(), data, data + len);
}

void flush_cb(png_structp) {}

struct ReadState {
  std::span<const std::uint8_t> in;
  std::size_t pos = 0;
};

void read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* state = static_cast<ReadState*>(png_get_io_ptr(png));
  if (state->pos + len > state->in.size()) png_error(png, "truncated PNG stream");
  std::memcpy(data, state->in.data() + state->pos, len);
  state->pos += len;
}

struct ErrorState {
  char message[256] = {};
};

[[noreturn]] void error_cb(png_structp png, png_const_charp msg) {
  auto* err = static_cast<ErrorState*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof(err->message), "png: %s", msg);
  png_longjmp(png, 1);
}
void warning_cb(png_structp, png_const_charp) {}

class Writer {
 public:
  Writer() {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err_, error_cb, warning_cb);
    if (!png_) throw IoError("png: cannot create write struct");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_write_struct(&png_, nullptr);
      throw IoError("png: cannot create info struct");
    }
    png_set_write_fn(png_, &state_, write_cb, flush_cb);
  }
  ~Writer() { png_destroy_write_struct(&png_, &info_); }
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  Bytes finish(std::vector<png_bytep>& rows) {
    png_write_info(png_, info_);
    png_write_image(png_, rows.data());
    png_write_end(png_, nullptr);
    return std::move(out_);
  }

  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  ErrorState err_;

 private:
  Bytes out_;
  WriteState state_{&out_};
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : state_{bytes} {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw IoError("png: bad signature");
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err_, error_cb, warning_cb);
    if (!png_) throw IoError("png: cannot create read struct");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_read_struct(&png_, nullptr, nullptr);
      throw IoError("png: cannot create info struct");
    }
    png_set_read_fn(png_, &state_, read_cb);
  }
  ~Reader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  int width() const { return static_cast<int>(png_get_image_width(png_, info_)); }
  int height() const { return static_cast<int>(png_get_image_height(png_, info_)); }

  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  ErrorState err_;

 private:
  ReadState state_;
};

}  // namespace

#define MAPGEN_PNG_GUARD(obj) \
  if (setjmp(png_jmpbuf((obj).png_))) throw IoError((obj).err_.message)

Bytes encode_rgb(const RgbImage& image) {
  static_assert(sizeof(Rgb) == 3);
  auto* base = reinterpret_cast<png_bytep>(const_cast<Rgb*>(image.pixels().data()));
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
  for (int y = 0; y < image.height(); ++y) rows[static_cast<std::size_t>(y)] = base + 3 * static_cast<std::size_t>(y) * image.width();
  Writer w;
  MAPGEN_PNG_GUARD(w);
  png_set_IHDR(w.png_, w.info_, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  return w.finish(rows);
}

Bytes encode_indexed(const LabelImage& indices, std::span<const Rgb> palette) {
  if (palette.empty() || palette.size() > 256) throw DataError("png: palette must hold 1..256 entries");
  for (ClassId v : indices.pixels()) {
    if (v >= palette.size()) throw DataError("png: index " + std::to_string(v) + " outside palette");
  }
  std::vector<png_color> pal;
  for (const Rgb& c : palette) pal.push_back(png_color{c.r, c.g, c.b});
  auto* base = const_cast<png_bytep>(indices.pixels().data());
  std::vector<png_bytep> rows(static_cast<std::size_t>(indices.height()));
  for (int y = 0; y < indices.height(); ++y) rows[static_cast<std::size_t>(y)] = base + static_cast<std::size_t>(y) * indices.width();
  Writer w;
  MAPGEN_PNG_GUARD(w);
  png_set_IHDR(w.png_, w.info_, static_cast<png_uint_32>(indices.width()), static_cast<png_uint_32>(indices.height()), 8,
               PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_PLTE(w.png_, w.info_, pal.data(), static_cast<int>(pal.size()));
  return w.finish(rows);
}

Bytes encode_mask(const BinaryMask& mask) {
  const std::size_t row_bytes = (static_cast<std::size_t>(mask.width()) + 7) / 8;
  std::vector<std::uint8_t> packed(row_bytes * static_cast<std::size_t>(mask.height()), 0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) packed[row_bytes * static_cast<std::size_t>(y) + static_cast<std::size_t>(x / 8)] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(mask.height()));
  for (int y = 0; y < mask.height(); ++y) rows[static_cast<std::size_t>(y)] = packed.data() + row_bytes * static_cast<std::size_t>(y);
  Writer w;
  MAPGEN_PNG_GUARD(w);
  png_set_IHDR(w.png_, w.info_, static_cast<png_uint_32>(mask.width()), static_cast<png_uint_32>(mask.height()), 1,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  return w.finish(rows);
}

// Allocation happens between the two guards so a longjmp never skips a live destructor.
RgbImage decode_rgb(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  MAPGEN_PNG_GUARD(r);
  png_read_info(r.png_, r.info_);
  png_set_expand(r.png_);
  png_set_strip_16(r.png_);
  png_set_strip_alpha(r.png_);
  png_set_gray_to_rgb(r.png_);
  png_read_update_info(r.png_, r.info_);
  if (png_get_channels(r.png_, r.info_) != 3) throw IoError("png: unsupported channel layout");
  RgbImage image(r.width(), r.height());
  auto* base = reinterpret_cast<png_bytep>(image.pixels().data());
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
  for (int y = 0; y < image.height(); ++y) rows[static_cast<std::size_t>(y)] = base + 3 * static_cast<std::size_t>(y) * image.width();
  MAPGEN_PNG_GUARD(r);
  png_read_image(r.png_, rows.data());
  png_read_end(r.png_, nullptr);
  return image;
}

IndexedImage decode_indexed(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  MAPGEN_PNG_GUARD(r);
  png_read_info(r.png_, r.info_);
  if (png_get_color_type(r.png_, r.info_) != PNG_COLOR_TYPE_PALETTE) throw DataError("png: not a palette image");
  png_colorp pal = nullptr;
  int count = 0;
  png_get_PLTE(r.png_, r.info_, &pal, &count);
  png_set_packing(r.png_);
  png_read_update_info(r.png_, r.info_);
  IndexedImage out;
  out.palette.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.palette.push_back(Rgb{pal[i].red, pal[i].green, pal[i].blue});
  out.indices = LabelImage(r.width(), r.height());
  auto* base = out.indices.pixels().data();
  std::vector<png_bytep> rows(static_cast<std::size_t>(out.indices.height()));
  for (int y = 0; y < out.indices.height(); ++y) rows[static_cast<std::size_t>(y)] = base + static_cast<std::size_t>(y) * out.indices.width();
  MAPGEN_PNG_GUARD(r);
  png_read_image(r.png_, rows.data());
  png_read_end(r.png_, nullptr);
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace mapgen::png
