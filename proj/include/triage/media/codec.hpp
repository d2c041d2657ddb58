#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "triage/media/audio.hpp"
#include "triage/media/image.hpp"

namespace triage::media {

// 16-bit little-endian mono PCM at 2000 Hz; samples clamped to [-1, 1].
std::string encode_pcm16le(const Waveform& w);
Waveform decode_pcm16le(const std::string& bytes);

// Binary portable graymap (P5), maxval 255.
std::string encode_pgm(const ImageGrid& img);
ImageGrid decode_pgm(const std::string& bytes);

// [s0, s1, ...]
nlohmann::json waveform_to_json(const Waveform& w);
Waveform waveform_from_json(const nlohmann::json& j);

// {"width","height","pixels":[...]} with row-major pixels, or an array of rows.
nlohmann::json image_to_json(const ImageGrid& img);
ImageGrid image_from_json(const nlohmann::json& j);

}  // namespace triage::media
