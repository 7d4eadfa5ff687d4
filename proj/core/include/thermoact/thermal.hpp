#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "thermoact/image.hpp"

namespace thermoact {

inline constexpr int kThermalWidth = 256;
inline constexpr int kThermalHeight = 192;
inline constexpr int kPseudocolorSize = 256;
inline constexpr double kSensorMinC = -50.0;
inline constexpr double kSensorMaxC = 500.0;

/// Display window for normalization, in degrees Celsius.
struct TempRange {
  double lo = 20.0;
  double hi = 35.0;

  void validate() const;
};

/// Radiometric frame: one surface temperature (deg C) per pixel, row-major.
struct ThermalFrame {
  int width = kThermalWidth;
  int height = kThermalHeight;
  std::vector<double> temps;
  double timestamp = 0.0;

  static ThermalFrame uniform(double temp_c, int width = kThermalWidth,
                              int height = kThermalHeight);

  double at(int x, int y) const { return temps[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return temps[static_cast<std::size_t>(y) * width + x]; }

  /// Throws kInvalidInput on size mismatch, non-finite or implausible values.
  void validate() const;
};

/// 256-entry pseudocolor lookup, index 0 coldest. Luminance is strictly
/// increasing with index.
class InfernoPalette {
 public:
  explicit InfernoPalette(const std::array<Rgb, 256>& entries);

  /// The embedded INFERNO table.
  static const InfernoPalette& inferno();

  Rgb operator[](std::uint8_t index) const noexcept { return entries_[index]; }
  const std::array<Rgb, 256>& entries() const noexcept { return entries_; }

 private:
  std::array<Rgb, 256> entries_;
};

double luminance(Rgb c) noexcept;

double normalize_temperature(double temp_c, const TempRange& range);

/// Round-half-up of u*255. Throws kInvalidInput outside [0, 1].
std::uint8_t quantize(double unit);

Rgb apply_palette(std::uint8_t index, const InfernoPalette& palette);

/// normalize -> quantize -> palette on the native 256x192 grid, then 32 rows
/// of palette[0] above and below to reach 256x256.
RgbImage thermal_to_pseudocolor(const ThermalFrame& frame, const TempRange& range = {},
                                const InfernoPalette& palette = InfernoPalette::inferno());

// Raw codec: 16-bit grayscale PNG, value = round((temp + 50) * 100).
std::uint16_t encode_centidegrees(double temp_c);
double decode_centidegrees(std::uint16_t value) noexcept;
std::vector<std::uint8_t> encode_raw(const ThermalFrame& frame);
/// Expects a kThermalWidth x kThermalHeight frame; anything else is kFormat.
ThermalFrame decode_raw(std::span<const std::uint8_t> bytes);

}  // namespace thermoact
