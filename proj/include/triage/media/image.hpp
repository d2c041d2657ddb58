#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace triage::media {

inline constexpr int kImageSize = 64;

struct ImageGrid {
  int width = kImageSize;
  int height = kImageSize;
  std::vector<double> pixels;  // row-major, grayscale in [0,1]

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y * width + x)]; }
};

enum class SkinClass { Healthy, Acne, Sweating, Measles };
const char* to_string(SkinClass c);
SkinClass skin_class_from_string(const std::string& s);

struct SkinImageSpec {
  SkinClass skin_class = SkinClass::Healthy;
  std::uint64_t seed = 0;
};

// Throws Error(InvalidSpec).
ImageGrid synth_skin_image(const SkinImageSpec& spec);

struct ImageFeatures {
  int blob_count = 0;          // dark components
  double blob_spread = 0.0;    // mean pairwise centroid distance, px
  double intensity_variance = 0.0;
  int bright_spot_count = 0;
};

inline constexpr double kDarkThreshold = 0.35;
inline constexpr double kBrightThreshold = 0.85;
inline constexpr int kMinBlobPixels = 3;

// Throws Error(InvalidSpec) for malformed grids.
ImageFeatures extract_image_features(const ImageGrid& img);

struct SkinClassification {
  SkinClass label = SkinClass::Healthy;
  double confidence = 0.5;
  bool refer = false;  // Measles: surfaces to triage as a forced referral
};

SkinClassification classify_skin_image(const ImageFeatures& f);

}  // namespace triage::media
