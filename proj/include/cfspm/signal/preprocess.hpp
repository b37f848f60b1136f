// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "cfspm/numeric/tensor.hpp"

namespace cfspm::signal {

/// A cue-aligned EEG trial before preprocessing.
struct RawTrial {
  Tensor samples;  // [C, T0], microvolts
  double fs = 0.0;
  std::string subject;
  int label = 0;  // 1..K
  std::vector<std::string> channels;

  std::size_t num_channels() const { return samples.dim(0); }
  std::size_t num_samples() const { return samples.dim(1); }
};

/// A trial after band-pass, resampling, re-referencing and baseline removal.
struct Trial {
  Tensor samples;  // [C, T]
  double fs = 0.0;
  std::string subject;
  int label = 0;
};

/// Checks RawTrial invariants (C >= 2, fs above twice the 30 Hz band edge,
/// label >= 1).
void validate(const RawTrial& x);

/// Transposed direct-form II second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
};

/// Digital Butterworth band-pass from an `order`-pole analog prototype
/// (bilinear transform with prewarping); `order` sections, unit gain at the
/// geometric band center.
std::vector<Biquad> butterworth_bandpass(int order, double lo, double hi, double fs);

std::complex<double> frequency_response(std::span<const Biquad> sos, double freq, double fs);

/// Padding used by sosfiltfilt for a cascade of `sections` biquads.
std::size_t filtfilt_padlen(std::size_t sections);

/// Zero-phase forward-backward filtering with odd-reflection padding and
/// steady-state initial conditions.
std::vector<double> sosfiltfilt(std::span<const Biquad> sos, std::span<const double> x);

RawTrial bandpass_filter(const RawTrial& x, double lo = 8.0, double hi = 30.0, int order = 4);

/// Rational up/down factors approximating fs_out / fs_in.
struct Ratio {
  std::size_t up = 1;
  std::size_t down = 1;
};
Ratio rational_ratio(double fs_in, double fs_out);

/// Polyphase rational resampling with a Kaiser-windowed anti-alias low-pass
/// at 0.45 * fs_out. Output length is round(T0 * fs_out / fs).
RawTrial resample(const RawTrial& x, double fs_out);

/// Common-average re-reference, then per-channel mean removal.
Trial car_and_baseline(const RawTrial& x);

struct PreprocessConfig {
  double band_lo = 8.0;
  double band_hi = 30.0;
  int filter_order = 4;
  double fs_out = 250.0;
};

/// bandpass -> resample -> CAR -> baseline.
Trial preprocess(const RawTrial& x, const PreprocessConfig& cfg = {});

}  // namespace cfspm::signal
