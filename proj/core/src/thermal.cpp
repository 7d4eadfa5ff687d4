#include "thermoact/thermal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "thermoact/error.hpp"

namespace thermoact {
namespace {

constexpr int kPadRows = (kPseudocolorSize - kThermalHeight) / 2;
constexpr char kTimestampKey[] = "thermoact:timestamp";

// Values this close below a .5 boundary still round up; absorbs the error of
// the u*255 product so that u == (k + 0.5) / 255 maps to k + 1.
constexpr double kHalfUpSlack = 1e-9;

}  // namespace

void TempRange::validate() const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw Error(ErrorCode::kInvalidInput, "temperature range requires finite lo < hi");
  }
}

ThermalFrame ThermalFrame::uniform(double temp_c, int width, int height) {
  ThermalFrame f;
  f.width = width;
  f.height = height;
  f.temps.assign(static_cast<std::size_t>(width) * height, temp_c);
  return f;
}

void ThermalFrame::validate() const {
  if (width <= 0 || height <= 0 || temps.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kInvalidInput, "thermal frame size does not match width*height");
  }
  for (double t : temps) {
    if (!std::isfinite(t) || t < kSensorMinC || t > kSensorMaxC) {
      throw Error(ErrorCode::kInvalidInput, "thermal pixel outside [-50, 500] C or non-finite");
    }
  }
}

double luminance(Rgb c) noexcept { return 0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b; }

InfernoPalette::InfernoPalette(const std::array<Rgb, 256>& entries) : entries_(entries) {
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (!(luminance(entries_[i]) > luminance(entries_[i - 1]))) {
      throw Error(ErrorCode::kInvalidInput,
                  "palette luminance not strictly increasing at index " + std::to_string(i));
    }
  }
}

double normalize_temperature(double temp_c, const TempRange& range) {
  if (!std::isfinite(temp_c)) {
    throw Error(ErrorCode::kInvalidInput, "non-finite temperature");
  }
  range.validate();
  const double u = (temp_c - range.lo) / (range.hi - range.lo);
  return std::clamp(u, 0.0, 1.0);
}

std::uint8_t quantize(double unit) {
  if (!(unit >= 0.0 && unit <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "quantize expects a value in [0, 1]");
  }
  const double scaled = unit * 255.0;
  const double whole = std::floor(scaled);
  const double frac = scaled - whole;
  const int q = static_cast<int>(whole) + (frac >= 0.5 - kHalfUpSlack ? 1 : 0);
  return static_cast<std::uint8_t>(std::min(q, 255));
}

Rgb apply_palette(std::uint8_t index, const InfernoPalette& palette) { return palette[index]; }

RgbImage thermal_to_pseudocolor(const ThermalFrame& frame, const TempRange& range,
                                const InfernoPalette& palette) {
  frame.validate();
  range.validate();
  if (frame.width != kThermalWidth || frame.height != kThermalHeight) {
    throw Error(ErrorCode::kInvalidInput, "pseudocolor conversion expects a 256x192 frame");
  }
  RgbImage out(kPseudocolorSize, kPseudocolorSize, palette[0]);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const auto q = quantize(normalize_temperature(frame.at(x, y), range));
      out.set(x, y + kPadRows, apply_palette(q, palette));
    }
  }
  return out;
}

std::uint16_t encode_centidegrees(double temp_c) {
  if (!std::isfinite(temp_c) || temp_c < kSensorMinC || temp_c > kSensorMaxC) {
    throw Error(ErrorCode::kInvalidInput, "temperature outside the raw codec range");
  }
  return static_cast<std::uint16_t>(std::lround((temp_c - kSensorMinC) * 100.0));
}

double decode_centidegrees(std::uint16_t value) noexcept { return value / 100.0 + kSensorMinC; }

std::vector<std::uint8_t> encode_raw(const ThermalFrame& frame) {
  frame.validate();
  Gray16Image img;
  img.width = frame.width;
  img.height = frame.height;
  img.pixels.reserve(frame.temps.size());
  for (double t : frame.temps) {
    img.pixels.push_back(encode_centidegrees(t));
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, frame.timestamp);
  const PngText text[] = {{kTimestampKey, std::string(buf, res.ptr)}};
  return encode_png_gray16(img, text);
}

ThermalFrame decode_raw(std::span<const std::uint8_t> bytes) {
  std::vector<PngText> text;
  const Gray16Image img = decode_png_gray16(bytes, &text);
  if (img.width != kThermalWidth || img.height != kThermalHeight) {
    throw Error(ErrorCode::kFormat, "raw thermal frame must be 256x192, got " +
                                        std::to_string(img.width) + "x" +
                                        std::to_string(img.height));
  }
  ThermalFrame frame;
  frame.width = img.width;
  frame.height = img.height;
  frame.temps.reserve(img.pixels.size());
  for (auto v : img.pixels) {
    const double t = decode_centidegrees(v);
    if (t > kSensorMaxC) {
      throw Error(ErrorCode::kFormat, "raw value above the sensor range");
    }
    frame.temps.push_back(t);
  }
  for (const auto& chunk : text) {
    if (chunk.key == kTimestampKey) {
      const auto& s = chunk.value;
      std::from_chars(s.data(), s.data() + s.size(), frame.timestamp);
    }
  }
  return frame;
}

}  // namespace thermoact
