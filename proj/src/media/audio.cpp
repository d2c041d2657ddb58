#include "triage/media/audio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "triage/common/error.hpp"
#include "triage/common/random.hpp"

namespace triage::media {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// S1: 60 Hz, S2: 90 Hz, both exponentially decaying packets.
constexpr double kS1Freq = 60.0, kS1Decay = 0.012, kS1Len = 0.06;
constexpr double kS2Freq = 90.0, kS2Decay = 0.010, kS2Len = 0.05, kS2Gain = 0.8;
constexpr double kS2Offset = 0.35;  // fraction of the cycle after S1
constexpr double kMurmurAmp = 0.4;
constexpr int kMurmurTones = 16;

double gaussian(std::mt19937_64& rng) {
  // Box-Muller on the portable uniform source.
  double u1;
  do u1 = uniform01(rng); while (u1 <= 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double power(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void add_packet(std::vector<double>& out, double start_s, double freq, double decay, double len, double gain,
                double fs) {
  const auto first = static_cast<long>(std::ceil(start_s * fs));
  const auto last = static_cast<long>(std::floor((start_s + len) * fs));
  for (long n = std::max(0L, first); n <= last && n < static_cast<long>(out.size()); ++n) {
    const double t = static_cast<double>(n) / fs - start_s;
    out[static_cast<std::size_t>(n)] += gain * std::sin(kTwoPi * freq * t) * std::exp(-t / decay);
  }
}

}  // namespace

const char* to_string(HeartLabel label) { return label == HeartLabel::Abnormal ? "Abnormal" : "Normal"; }

HeartSoundParts synth_heart_sound_parts(const HeartSoundSpec& spec) {
  if (!(spec.bpm >= 30.0 && spec.bpm <= 180.0)) throw Error(ErrorCode::InvalidSpec, "bpm must lie in [30, 180]");
  if (spec.snr_db && !(*spec.snr_db > 0.0)) throw Error(ErrorCode::InvalidSpec, "snr_db must be > 0");
  if (!(spec.duration_s > 0.0 && spec.duration_s <= 60.0))
    throw Error(ErrorCode::InvalidSpec, "duration must lie in (0, 60] s");

  const double fs = kSampleRate;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * fs));
  const double period = 60.0 / spec.bpm;
  std::mt19937_64 rng(spec.seed);
  HeartSoundParts parts{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};

  // Cycles start at a seeded phase so different seeds are not sample-aligned.
  const double phase = uniform01(rng) * period;
  for (double beat = phase - period; beat < spec.duration_s; beat += period) {
    add_packet(parts.signal, beat, kS1Freq, kS1Decay, kS1Len, 1.0, fs);
    const double s2 = beat + kS2Offset * period;
    add_packet(parts.signal, s2, kS2Freq, kS2Decay, kS2Len, kS2Gain, fs);
    if (!spec.murmur) continue;
    // Band-limited noise as a sum of random 150-300 Hz tones, Hann-tapered
    // over the gap between S1 and S2.
    double freqs[kMurmurTones], phases[kMurmurTones];
    for (int k = 0; k < kMurmurTones; ++k) {
      freqs[k] = uniform(rng, 150.0, 300.0);
      phases[k] = uniform(rng, 0.0, kTwoPi);
    }
    const double start = beat + kS1Len, stop = s2;
    if (stop <= start) continue;
    const double amp = kMurmurAmp / std::sqrt(static_cast<double>(kMurmurTones));
    const auto first = static_cast<long>(std::ceil(start * fs));
    const auto last = static_cast<long>(std::floor(stop * fs));
    for (long i = std::max(0L, first); i <= last && i < static_cast<long>(n); ++i) {
      const double t = static_cast<double>(i) / fs;
      const double taper = 0.5 - 0.5 * std::cos(kTwoPi * (t - start) / (stop - start));
      double v = 0.0;
      for (int k = 0; k < kMurmurTones; ++k) v += std::sin(kTwoPi * freqs[k] * t + phases[k]);
      parts.signal[static_cast<std::size_t>(i)] += amp * taper * v;
    }
  }

  if (spec.snr_db) {
    for (auto& v : parts.noise) v = gaussian(rng);
    // Scale from the realized noise power so the SNR is exact for this draw.
    const double target = power(parts.signal) / std::pow(10.0, *spec.snr_db / 10.0);
    const double realized = power(parts.noise);
    const double scale = realized > 0.0 ? std::sqrt(target / realized) : 0.0;
    for (auto& v : parts.noise) v *= scale;
  }
  return parts;
}

Waveform synth_heart_sound(const HeartSoundSpec& spec) {
  auto parts = synth_heart_sound_parts(spec);
  Waveform w;
  w.samples = std::move(parts.signal);
  for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] += parts.noise[i];
  w.label_hint = spec.murmur ? "Abnormal" : "Normal";
  return w;
}

AudioFeatures extract_audio_features(const Waveform& w) {
  if (!(w.sample_rate > 0.0)) throw Error(ErrorCode::InvalidSpec, "sample rate must be > 0");
  const auto& x = w.samples;
  const std::size_t n = x.size();
  if (static_cast<double>(n) < 2.0 * w.sample_rate) throw Error(ErrorCode::TooShort, "need at least 2 s of audio");
  for (double v : x)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidSpec, "non-finite sample");

  AudioFeatures f;
  double energy = 0.0;
  for (double v : x) energy += v * v;
  f.rms = std::sqrt(energy / static_cast<double>(n));
  if (energy == 0.0) return f;

  // Biased autocorrelation (normalized by total energy) stays within [-1, 1]
  // and prefers the fundamental beat lag over its multiples.
  const auto min_lag = static_cast<std::size_t>(std::ceil(w.sample_rate * 60.0 / 180.0));
  const auto max_lag = std::min(n - 1, static_cast<std::size_t>(std::floor(w.sample_rate * 60.0 / 30.0)));
  double best = 0.0;
  std::size_t best_lag = 0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += x[i] * x[i + lag];
    const double r = s / energy;
    if (r > best) {
      best = r;
      best_lag = lag;
    }
  }
  f.periodicity = std::clamp(best, 0.0, 1.0);
  f.beat_lag_s = static_cast<double>(best_lag) / w.sample_rate;

  // Direct Fourier sums with 2 Hz resolution: the signal is cut into 0.5 s
  // frames whose DFT bins sit exactly on the 2 Hz grid, and bin energies are
  // summed over frames. A single long transform sampled every 2 Hz would
  // over-weight periodic components whose harmonics happen to hit the grid.
  const auto frame = static_cast<std::size_t>(std::lround(w.sample_rate / 2.0));
  std::vector<double> cos_table(frame), sin_table(frame);
  for (std::size_t i = 0; i < frame; ++i) {
    cos_table[i] = std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(frame));
    sin_table[i] = std::sin(kTwoPi * static_cast<double>(i) / static_cast<double>(frame));
  }
  double band = 0.0, total = 0.0;
  for (std::size_t start = 0; start + frame <= n; start += frame) {
    const double* seg = &x[start];
    for (std::size_t k = 0; k <= frame / 2; ++k) {
      double re = 0.0, im = 0.0;
      std::size_t idx = 0;
      for (std::size_t i = 0; i < frame; ++i) {
        re += seg[i] * cos_table[idx];
        im -= seg[i] * sin_table[idx];
        idx += k;
        if (idx >= frame) idx -= frame;
      }
      const double e = re * re + im * im;
      const double freq = static_cast<double>(k) * w.sample_rate / static_cast<double>(frame);
      total += e;
      if (freq >= 100.0 && freq <= 400.0) band += e;
    }
  }
  f.band_energy_ratio = total > 0.0 ? band / total : 0.0;
  return f;
}

HeartClassification classify_heart_sound(const AudioFeatures& f, double threshold) {
  HeartClassification c;
  const double margin = f.band_energy_ratio - threshold;
  c.label = margin > 0.0 ? HeartLabel::Abnormal : HeartLabel::Normal;
  // Logistic in the distance from the threshold: 0.5 exactly at it.
  c.confidence = 1.0 / (1.0 + std::exp(-kHeartConfidenceScale * std::abs(margin)));
  return c;
}

ThresholdCalibration calibrate_heart_threshold(const std::vector<double>& normal_ratios,
                                               const std::vector<double>& abnormal_ratios) {
  if (normal_ratios.empty() || abnormal_ratios.empty())
    throw Error(ErrorCode::InvalidParams, "both classes need samples");
  std::vector<double> cuts;
  for (const auto* v : {&normal_ratios, &abnormal_ratios}) cuts.insert(cuts.end(), v->begin(), v->end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto balanced = [&](double t) {
    const double tn = static_cast<double>(std::count_if(normal_ratios.begin(), normal_ratios.end(),
                                                        [t](double r) { return !(r > t); }));
    const double tp = static_cast<double>(std::count_if(abnormal_ratios.begin(), abnormal_ratios.end(),
                                                        [t](double r) { return r > t; }));
    return 0.5 * (tn / static_cast<double>(normal_ratios.size()) + tp / static_cast<double>(abnormal_ratios.size()));
  };
  // A threshold at cuts[i] behaves the same everywhere on [cuts[i], cuts[i+1]).
  ThresholdCalibration best;
  best.balanced_accuracy = -1.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double acc = balanced(cuts[i]);
    if (acc > best.balanced_accuracy) {
      best.balanced_accuracy = acc;
      best.interval_low = cuts[i];
      best.interval_high = cuts[i + 1];
    }
  }
  if (best.balanced_accuracy < 0.0) {
    best.interval_low = best.interval_high = cuts.front();
    best.balanced_accuracy = balanced(cuts.front());
  }
  best.threshold = 0.5 * (best.interval_low + best.interval_high);
  return best;
}

HeartPopulation heart_population(int per_class, std::uint64_t seed) {
  HeartPopulation pop;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < per_class; ++i) {
    for (bool murmur : {false, true}) {
      for (bool noisy : {false, true}) {
        HeartSoundSpec spec;
        spec.bpm = uniform(rng, 50.0, 120.0);
        spec.murmur = murmur;
        if (noisy) spec.snr_db = 10.0;
        spec.seed = rng();
        const double r = extract_audio_features(synth_heart_sound(spec)).band_energy_ratio;
        (murmur ? pop.abnormal_ratios : pop.normal_ratios).push_back(r);
      }
    }
  }
  return pop;
}

}  // namespace triage::media
