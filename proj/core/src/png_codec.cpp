#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstring>

#include "thermoact/error.hpp"
#include "thermoact/image.hpp"

namespace thermoact {
namespace {

struct WriteSink {
  std::vector<std::uint8_t> out;
};

void write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* sink = static_cast<WriteSink*>(png_get_io_ptr(png));
  sink->out.insert(sink->out.end(), data, data + length);
}

void flush_noop(png_structp) {}

struct ReadSource {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;
};

void read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<ReadSource*>(png_get_io_ptr(png));
  if (src->pos + length > src->data.size()) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, src->data.data() + src->pos, length);
  src->pos += length;
}

void warning_noop(png_structp, png_const_charp) {}

std::vector<png_text> text_chunks(std::span<const PngText> text) {
  std::vector<png_text> chunks(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    chunks[i] = {};
    chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
    chunks[i].key = const_cast<char*>(text[i].key.c_str());
    chunks[i].text = const_cast<char*>(text[i].value.c_str());
    chunks[i].text_length = text[i].value.size();
  }
  return chunks;
}

// No objects with destructors are created in this frame after setjmp.
void write_png_into(WriteSink& sink, int width, int height, int bit_depth, int color_type,
                    std::vector<png_bytep>& rows, std::vector<png_text>& chunks) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, warning_noop);
  if (png == nullptr) {
    throw Error(ErrorCode::kFormat, "png_create_write_struct failed");
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kFormat, "PNG encoding failed");
  }
  png_set_write_fn(png, &sink, write_to_vector, flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  if (!chunks.empty()) {
    png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
  }
  png_write_info(png, info);
  if (bit_depth == 16) {
    png_set_swap(png);  // host little-endian -> network order
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> write_png(int width, int height, int bit_depth, int color_type,
                                    std::vector<png_bytep>& rows, std::span<const PngText> text) {
  WriteSink sink;
  std::vector<png_text> chunks = text_chunks(text);
  write_png_into(sink, width, height, bit_depth, color_type, rows, chunks);
  return std::move(sink.out);
}

struct DecodedPng {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint8_t> data;
  std::vector<PngText> text;
};

// `expect_depth`/`expect_color` are checked before any pixel data is read.
void read_png(std::span<const std::uint8_t> bytes, int expect_depth, int expect_color,
              DecodedPng* out) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::kFormat, "not a PNG stream");
  }
  ReadSource src{bytes, 0};
  std::vector<png_bytep> rows;
  bool mismatch = false;

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, warning_noop);
  if (png == nullptr) {
    throw Error(ErrorCode::kFormat, "png_create_read_struct failed");
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kFormat, "malformed PNG stream");
  }
  png_set_read_fn(png, &src, read_from_span);
  png_read_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  out->color_type = png_get_color_type(png, info);
  if (out->bit_depth != expect_depth || out->color_type != expect_color ||
      png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
    mismatch = true;
  } else {
    png_textp chunks = nullptr;
    int n = 0;
    png_get_text(png, info, &chunks, &n);
    for (int i = 0; i < n; ++i) {
      out->text.push_back({chunks[i].key, std::string(chunks[i].text, chunks[i].text_length)});
    }
    if (expect_depth == 16) {
      png_set_swap(png);
    }
    png_read_update_info(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    out->data.resize(stride * out->height);
    rows.resize(out->height);
    for (png_uint_32 y = 0; y < out->height; ++y) {
      rows[y] = out->data.data() + y * stride;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (mismatch) {
    throw Error(ErrorCode::kFormat, "unexpected PNG layout: bit depth " +
                                        std::to_string(out->bit_depth) + ", color type " +
                                        std::to_string(out->color_type));
  }
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  if (image.empty()) {
    throw Error(ErrorCode::kInvalidInput, "cannot encode an empty image");
  }
  auto bytes = image.bytes();
  std::vector<png_bytep> rows(image.height());
  for (int y = 0; y < image.height(); ++y) {
    rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * image.width() * 3);
  }
  return write_png(image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, rows, {});
}

RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes) {
  DecodedPng png;
  read_png(bytes, 8, PNG_COLOR_TYPE_RGB, &png);
  RgbImage image(static_cast<int>(png.width), static_cast<int>(png.height));
  std::copy(png.data.begin(), png.data.end(), image.bytes().begin());
  return image;
}

std::vector<std::uint8_t> encode_png_gray16(const Gray16Image& image, std::span<const PngText> text) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw Error(ErrorCode::kInvalidInput, "gray16 image dimensions do not match pixel count");
  }
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<std::uint16_t*>(image.pixels.data() + static_cast<std::size_t>(y) * image.width));
  }
  return write_png(image.width, image.height, 16, PNG_COLOR_TYPE_GRAY, rows, text);
}

Gray16Image decode_png_gray16(std::span<const std::uint8_t> bytes, std::vector<PngText>* text) {
  DecodedPng png;
  read_png(bytes, 16, PNG_COLOR_TYPE_GRAY, &png);
  Gray16Image image;
  image.width = static_cast<int>(png.width);
  image.height = static_cast<int>(png.height);
  image.pixels.resize(static_cast<std::size_t>(image.width) * image.height);
  std::memcpy(image.pixels.data(), png.data.data(), image.pixels.size() * 2);
  if (text != nullptr) {
    *text = std::move(png.text);
  }
  return image;
}

ImageSize png_dimensions(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kIhdr[4] = {'I', 'H', 'D', 'R'};
  if (bytes.size() < 24 || png_sig_cmp(bytes.data(), 0, 8) != 0 ||
      std::memcmp(bytes.data() + 12, kIhdr, 4) != 0) {
    throw Error(ErrorCode::kFormat, "not a PNG stream");
  }
  auto be32 = [&](std::size_t at) {
    return static_cast<int>((bytes[at] << 24) | (bytes[at + 1] << 16) | (bytes[at + 2] << 8) |
                            bytes[at + 3]);
  };
  return {be32(16), be32(20)};
}

}  // namespace thermoact
