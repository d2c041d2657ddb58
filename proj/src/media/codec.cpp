#include "triage/media/codec.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>

#include "triage/common/error.hpp"

namespace triage::media {

std::string encode_pcm16le(const Waveform& w) {
  std::string out;
  out.reserve(w.samples.size() * 2);
  for (double v : w.samples) {
    const auto s = static_cast<std::int16_t>(std::lround(std::clamp(v, -1.0, 1.0) * 32767.0));
    const auto u = static_cast<std::uint16_t>(s);
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>(u >> 8));
  }
  return out;
}

Waveform decode_pcm16le(const std::string& bytes) {
  if (bytes.size() % 2 != 0) throw Error(ErrorCode::ParseError, "PCM16 payload has an odd byte count");
  Waveform w;
  w.samples.reserve(bytes.size() / 2);
  for (std::size_t i = 0; i < bytes.size(); i += 2) {
    const auto u = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[i]) |
                                              (static_cast<unsigned char>(bytes[i + 1]) << 8));
    w.samples.push_back(static_cast<std::int16_t>(u) / 32767.0);
  }
  return w;
}

std::string encode_pgm(const ImageGrid& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  for (double p : img.pixels) out.push_back(static_cast<char>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0)));
  return out;
}

ImageGrid decode_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw Error(ErrorCode::ParseError, "truncated PGM header");
    return bytes.substr(start, pos - start);
  };
  auto number = [&]() {
    const auto t = token();
    if (!std::all_of(t.begin(), t.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }) ||
        t.size() > 6)
      throw Error(ErrorCode::ParseError, "bad PGM header field '" + t + "'");
    return std::stoi(t);
  };
  if (token() != "P5") throw Error(ErrorCode::ParseError, "not a binary PGM (P5)");
  ImageGrid img;
  img.width = number();
  img.height = number();
  const int maxval = number();
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 255)
    throw Error(ErrorCode::ParseError, "unsupported PGM dimensions or maxval");
  ++pos;  // single whitespace before the raster
  const auto count = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  if (bytes.size() < pos + count) throw Error(ErrorCode::ParseError, "truncated PGM raster");
  img.pixels.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    img.pixels.push_back(static_cast<unsigned char>(bytes[pos + i]) / static_cast<double>(maxval));
  return img;
}

nlohmann::json waveform_to_json(const Waveform& w) { return w.samples; }

Waveform waveform_from_json(const nlohmann::json& j) {
  Waveform w;
  const auto& arr = j.is_object() && j.contains("samples") ? j.at("samples") : j;
  if (!arr.is_array()) throw Error(ErrorCode::ParseError, "waveform must be a JSON array of samples");
  for (const auto& v : arr) {
    if (!v.is_number()) throw Error(ErrorCode::ParseError, "waveform samples must be numbers");
    w.samples.push_back(v.get<double>());
  }
  if (j.is_object() && j.contains("sample_rate")) w.sample_rate = j.at("sample_rate").get<double>();
  return w;
}

nlohmann::json image_to_json(const ImageGrid& img) {
  return {{"width", img.width}, {"height", img.height}, {"pixels", img.pixels}};
}

ImageGrid image_from_json(const nlohmann::json& j) {
  ImageGrid img;
  try {
    if (j.is_array()) {
      img.height = static_cast<int>(j.size());
      img.width = img.height ? static_cast<int>(j.at(0).size()) : 0;
      for (const auto& row : j) {
        if (!row.is_array() || static_cast<int>(row.size()) != img.width)
          throw Error(ErrorCode::ParseError, "image rows differ in length");
        for (const auto& v : row) img.pixels.push_back(v.get<double>());
      }
    } else {
      img.width = j.at("width").get<int>();
      img.height = j.at("height").get<int>();
      img.pixels = j.at("pixels").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed image: ") + e.what());
  }
  if (img.width <= 0 || img.height <= 0 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height))
    throw Error(ErrorCode::ParseError, "pixel count does not match width x height");
  return img;
}

}  // namespace triage::media
