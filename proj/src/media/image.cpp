#include "triage/media/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "triage/common/error.hpp"
#include "triage/common/random.hpp"

namespace triage::media {

namespace {

constexpr double kDiskDark = 0.15;
constexpr double kDotBright = 0.95;
constexpr double kNoiseSigma = 0.02;

struct Disk {
  double x, y;
  int r;
};

double gaussian(std::mt19937_64& rng) {
  double u1;
  do u1 = uniform01(rng); while (u1 <= 0.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * uniform01(rng));
}

int rand_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

// Places up to `count` disks with centers in [x0, x0+w) x [y0, y0+h), keeping a
// one-pixel gap so each stays its own 4-connected component.
std::vector<Disk> place_disks(std::mt19937_64& rng, int count, int r_lo, int r_hi, int x0, int y0, int w, int h) {
  std::vector<Disk> disks;
  for (int attempt = 0; attempt < 2000 && static_cast<int>(disks.size()) < count; ++attempt) {
    const int r = rand_int(rng, r_lo, r_hi);
    const Disk d{static_cast<double>(x0 + rand_int(rng, 0, w - 1)), static_cast<double>(y0 + rand_int(rng, 0, h - 1)),
                 r};
    if (d.x - r < 0 || d.y - r < 0 || d.x + r >= kImageSize || d.y + r >= kImageSize) continue;
    const bool clear = std::all_of(disks.begin(), disks.end(), [&](const Disk& o) {
      return std::hypot(d.x - o.x, d.y - o.y) > d.r + o.r + 1.5;
    });
    if (clear) disks.push_back(d);
  }
  return disks;
}

void paint(std::vector<double>& px, const Disk& d, double value) {
  for (int y = static_cast<int>(d.y) - d.r; y <= static_cast<int>(d.y) + d.r; ++y)
    for (int x = static_cast<int>(d.x) - d.r; x <= static_cast<int>(d.x) + d.r; ++x)
      if ((x - d.x) * (x - d.x) + (y - d.y) * (y - d.y) <= d.r * d.r + 0.5)
        px[static_cast<std::size_t>(y * kImageSize + x)] = value;
}

struct Component {
  int pixels = 0;
  double cx = 0.0, cy = 0.0;
};

std::vector<Component> components(const ImageGrid& img, bool (*member)(double)) {
  const int w = img.width, h = img.height;
  std::vector<char> seen(img.pixels.size(), 0);
  std::vector<Component> out;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (seen[static_cast<std::size_t>(start)] || !member(img.pixels[static_cast<std::size_t>(start)])) continue;
    Component c;
    stack.assign(1, start);
    seen[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int x = p % w, y = p / w;
      ++c.pixels;
      c.cx += x;
      c.cy += y;
      const int nbr[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
      for (const auto& q : nbr) {
        if (q[0] < 0 || q[1] < 0 || q[0] >= w || q[1] >= h) continue;
        const auto idx = static_cast<std::size_t>(q[1] * w + q[0]);
        if (seen[idx] || !member(img.pixels[idx])) continue;
        seen[idx] = 1;
        stack.push_back(static_cast<int>(idx));
      }
    }
    if (c.pixels < kMinBlobPixels) continue;
    c.cx /= c.pixels;
    c.cy /= c.pixels;
    out.push_back(c);
  }
  return out;
}

double logistic(double m) { return 1.0 / (1.0 + std::exp(-m)); }

}  // namespace

const char* to_string(SkinClass c) {
  switch (c) {
    case SkinClass::Healthy: return "Healthy";
    case SkinClass::Acne: return "Acne";
    case SkinClass::Sweating: return "Sweating";
    case SkinClass::Measles: return "Measles";
  }
  return "Healthy";
}

SkinClass skin_class_from_string(const std::string& s) {
  for (auto c : {SkinClass::Healthy, SkinClass::Acne, SkinClass::Sweating, SkinClass::Measles})
    if (s == to_string(c)) return c;
  throw Error(ErrorCode::InvalidSpec, "unknown skin class '" + s + "'");
}

ImageGrid synth_skin_image(const SkinImageSpec& spec) {
  const int cls = static_cast<int>(spec.skin_class);
  if (cls < 0 || cls > 3) throw Error(ErrorCode::InvalidSpec, "unknown skin class");
  std::mt19937_64 rng(spec.seed);
  ImageGrid img;
  img.pixels.resize(static_cast<std::size_t>(kImageSize * kImageSize));

  // Smooth radial gradient, 0.7 at the center falling to 0.6 at the corners.
  const double c = (kImageSize - 1) / 2.0, rmax = std::hypot(c, c);
  for (int y = 0; y < kImageSize; ++y)
    for (int x = 0; x < kImageSize; ++x)
      img.pixels[static_cast<std::size_t>(y * kImageSize + x)] = 0.7 - 0.1 * std::hypot(x - c, y - c) / rmax;

  switch (spec.skin_class) {
    case SkinClass::Healthy: break;
    case SkinClass::Acne: {
      const int region = 24;
      const int x0 = rand_int(rng, 3, kImageSize - region - 3), y0 = rand_int(rng, 3, kImageSize - region - 3);
      for (const auto& d : place_disks(rng, rand_int(rng, 5, 12), 2, 3, x0, y0, region, region))
        paint(img.pixels, d, kDiskDark);
      break;
    }
    case SkinClass::Measles:
      for (const auto& d : place_disks(rng, rand_int(rng, 20, 40), 1, 2, 0, 0, kImageSize, kImageSize))
        paint(img.pixels, d, kDiskDark);
      break;
    case SkinClass::Sweating:
      for (const auto& d : place_disks(rng, rand_int(rng, 10, 20), 1, 1, 0, 0, kImageSize, kImageSize))
        paint(img.pixels, d, kDotBright);
      break;
  }
  for (auto& p : img.pixels) p = std::clamp(p + kNoiseSigma * gaussian(rng), 0.0, 1.0);
  return img;
}

ImageFeatures extract_image_features(const ImageGrid& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height))
    throw Error(ErrorCode::InvalidSpec, "pixel count does not match the grid size");
  for (double p : img.pixels)
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidSpec, "pixel outside [0, 1]");

  ImageFeatures f;
  const auto dark = components(img, [](double p) { return p < kDarkThreshold; });
  const auto bright = components(img, [](double p) { return p > kBrightThreshold; });
  f.blob_count = static_cast<int>(dark.size());
  f.bright_spot_count = static_cast<int>(bright.size());
  if (dark.size() >= 2) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < dark.size(); ++a)
      for (std::size_t b = a + 1; b < dark.size(); ++b, ++pairs)
        sum += std::hypot(dark[a].cx - dark[b].cx, dark[a].cy - dark[b].cy);
    f.blob_spread = sum / static_cast<double>(pairs);
  }
  double mean = 0.0;
  for (double p : img.pixels) mean += p;
  mean /= static_cast<double>(img.pixels.size());
  for (double p : img.pixels) f.intensity_variance += (p - mean) * (p - mean);
  f.intensity_variance /= static_cast<double>(img.pixels.size());
  return f;
}

SkinClassification classify_skin_image(const ImageFeatures& f) {
  SkinClassification c;
  const double blobs = f.blob_count, bright = f.bright_spot_count;
  // Margins are measured to the half-integer (or 20 px) boundary of each rule.
  const double spread_margin = (f.blob_spread - 20.0) / 4.0;
  if (bright >= 8) {
    c.label = SkinClass::Sweating;
    c.confidence = logistic(bright - 7.5);
  } else if (blobs >= 15 || (blobs >= 5 && f.blob_spread >= 20.0)) {
    c.label = SkinClass::Measles;
    c.refer = true;
    const double by_count = blobs - 14.5;
    const double by_spread = std::min(blobs - 4.5, spread_margin);
    c.confidence = logistic(std::min(std::max(by_count, by_spread), 7.5 - bright));
  } else if (blobs >= 4) {
    c.label = SkinClass::Acne;
    double m = std::min({blobs - 3.5, 14.5 - blobs, 7.5 - bright});
    if (blobs >= 5) m = std::min(m, -spread_margin);
    c.confidence = logistic(m);
  } else {
    c.label = SkinClass::Healthy;
    c.confidence = logistic(std::min(3.5 - blobs, 7.5 - bright));
  }
  return c;
}

}  // namespace triage::media
