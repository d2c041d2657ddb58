#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace triage::media {

inline constexpr double kSampleRate = 2000.0;

struct Waveform {
  double sample_rate = kSampleRate;
  std::vector<double> samples;
  std::optional<std::string> label_hint;  // set by the generator only
};

struct HeartSoundSpec {
  double bpm = 60.0;
  bool murmur = false;
  std::optional<double> snr_db;  // absent = clean
  std::uint64_t seed = 0;
  double duration_s = 5.0;
};

// The generated sound before and after noise, for SNR checks.
struct HeartSoundParts {
  std::vector<double> signal;
  std::vector<double> noise;  // all zeros when clean
};

// Throws Error(InvalidSpec).
Waveform synth_heart_sound(const HeartSoundSpec& spec);
HeartSoundParts synth_heart_sound_parts(const HeartSoundSpec& spec);

struct AudioFeatures {
  double rms = 0.0;
  double periodicity = 0.0;       // peak normalized autocorrelation over 30-180 bpm lags
  double beat_lag_s = 0.0;        // lag of that peak
  double band_energy_ratio = 0.0; // 100-400 Hz share of spectral energy
};

// Throws Error(TooShort) below 2 s of samples.
AudioFeatures extract_audio_features(const Waveform& w);

enum class HeartLabel { Normal, Abnormal };
const char* to_string(HeartLabel label);

struct HeartClassification {
  HeartLabel label = HeartLabel::Normal;
  double confidence = 0.5;
};

// Calibrated by calibrate_heart_threshold over the default synthetic population.
inline constexpr double kDefaultBandThreshold = 0.302;
inline constexpr double kHeartConfidenceScale = 25.0;

HeartClassification classify_heart_sound(const AudioFeatures& f, double threshold = kDefaultBandThreshold);

struct ThresholdCalibration {
  double threshold = 0.0;
  double balanced_accuracy = 0.0;
  double interval_low = 0.0;   // every threshold in [low, high) reaches the same accuracy
  double interval_high = 0.0;
};

// Sweeps candidate thresholds between sorted band ratios; returns the midpoint
// of the best interval.
ThresholdCalibration calibrate_heart_threshold(const std::vector<double>& normal_ratios,
                                               const std::vector<double>& abnormal_ratios);

// Default population used to fix kDefaultBandThreshold: per class, `per_class`
// clean and `per_class` 10 dB sounds, bpm drawn from 50-120.
struct HeartPopulation {
  std::vector<double> normal_ratios;
  std::vector<double> abnormal_ratios;
};
HeartPopulation heart_population(int per_class, std::uint64_t seed);

}  // namespace triage::media
