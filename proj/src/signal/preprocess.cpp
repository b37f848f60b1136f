// SPDX-License-Identifier: Apache-2.0
#include "cfspm/signal/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cfspm/error.hpp"

namespace cfspm::signal {

using cplx = std::complex<double>;

void validate(const RawTrial& x) {
  if (x.samples.rank() != 2) throw ValidationError("raw trial samples must be [C, T]");
  if (x.num_channels() < 2) throw ValidationError("raw trial needs at least 2 channels");
  if (!(x.fs > 60.0)) throw ValidationError("raw trial fs must exceed 60 Hz");
  if (x.label < 1) throw ValidationError("raw trial label must be >= 1");
  if (!x.channels.empty() && x.channels.size() != x.num_channels()) {
    throw ValidationError("channel name count does not match samples");
  }
}

std::vector<Biquad> butterworth_bandpass(int order, double lo, double hi, double fs) {
  if (order < 1) throw ValidationError("filter order must be >= 1");
  if (!(lo > 0.0 && lo < hi && hi < fs / 2.0)) {
    throw ValidationError("band-pass edges must satisfy 0 < lo < hi < fs/2");
  }
  const double w1 = 2.0 * fs * std::tan(std::numbers::pi * lo / fs);
  const double w2 = 2.0 * fs * std::tan(std::numbers::pi * hi / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;
  std::vector<cplx> upper;  // digital poles with positive imaginary part
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    const cplx p = std::polar(1.0, theta);
    const cplx half = p * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0sq);
    for (const cplx s : {half + root, half - root}) {
      const cplx z = (2.0 * fs + s) / (2.0 * fs - s);
      if (z.imag() > 0.0) upper.push_back(z);
    }
  }
  if (upper.size() != static_cast<std::size_t>(order)) {
    throw NumericError("band-pass design produced a real pole; band too wide");
  }
  std::sort(upper.begin(), upper.end(),
            [](cplx a, cplx b) { return std::arg(a) < std::arg(b); });
  std::vector<Biquad> sos;
  for (const cplx z : upper) sos.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
  const double center = std::atan(std::sqrt(w0sq) / (2.0 * fs)) * fs / std::numbers::pi;
  const double gain = std::abs(frequency_response(sos, center, fs));
  sos.front().b0 /= gain;
  sos.front().b2 /= gain;
  return sos;
}

cplx frequency_response(std::span<const Biquad> sos, double freq, double fs) {
  const cplx zi = std::polar(1.0, -2.0 * std::numbers::pi * freq / fs);
  cplx h = 1.0;
  for (const Biquad& s : sos) {
    h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
  }
  return h;
}

std::size_t filtfilt_padlen(std::size_t sections) { return 3 * (2 * sections + 1); }

namespace {

// Runs the cascade in place from steady-state initial conditions for a
// constant input equal to x[0].
void sosfilt_steady(std::span<const Biquad> sos, std::vector<double>& x) {
  double level = x.front();
  for (const Biquad& s : sos) {
    const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    double z2 = (s.b2 - s.a2 * dc) * level;
    double z1 = (dc - s.b0) * level;
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * y + z2;
      z2 = s.b2 * in - s.a2 * y;
      v = y;
    }
    level *= dc;
  }
}

}  // namespace

std::vector<double> sosfiltfilt(std::span<const Biquad> sos, std::span<const double> x) {
  const std::size_t pad = filtfilt_padlen(sos.size());
  const std::size_t n = x.size();
  if (n <= pad) {
    throw ValidationError("trial of " + std::to_string(n) +
                          " samples is too short for zero-phase filtering (needs > " +
                          std::to_string(pad) + ")");
  }
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  sosfilt_steady(sos, ext);
  std::reverse(ext.begin(), ext.end());
  sosfilt_steady(sos, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

RawTrial bandpass_filter(const RawTrial& x, double lo, double hi, int order) {
  validate(x);
  if (!(lo > 0.0 && lo < hi && hi < x.fs / 2.0)) {
    throw ValidationError("band [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] Hz lies outside (0, fs/2) for fs " + std::to_string(x.fs));
  }
  const auto sos = butterworth_bandpass(order, lo, hi, x.fs);
  RawTrial out = x;
  out.samples = Tensor(x.samples.shape());
  const std::size_t C = x.num_channels(), T = x.num_samples();
  auto dst = out.samples.mutable_data();
  for (std::size_t c = 0; c < C; ++c) {
    const auto y = sosfiltfilt(sos, x.samples.data().subspan(c * T, T));
    std::copy(y.begin(), y.end(), dst.begin() + static_cast<std::ptrdiff_t>(c * T));
  }
  return out;
}

Ratio rational_ratio(double fs_in, double fs_out) {
  if (!(fs_out > 0.0) || !(fs_in > 0.0)) throw ValidationError("sampling rates must be positive");
  const double r = fs_out / fs_in;
  for (std::size_t down = 1; down <= 4096; ++down) {
    const double up = std::round(r * static_cast<double>(down));
    if (up < 1.0) continue;
    if (std::abs(up / static_cast<double>(down) - r) <= 1e-9 * r) {
      const auto u = static_cast<std::size_t>(up);
      const std::size_t g = std::gcd(u, down);
      return {u / g, down / g};
    }
  }
  throw ValidationError("resampling ratio " + std::to_string(r) +
                        " has no small rational approximation");
}

namespace {

std::vector<double> kaiser_lowpass(std::size_t half, double cutoff, double gain) {
  constexpr double kBeta = 5.0;
  const std::size_t taps = 2 * half + 1;
  std::vector<double> h(taps);
  const double i0b = std::cyl_bessel_i(0.0, kBeta);
  for (std::size_t k = 0; k < taps; ++k) {
    const double m = static_cast<double>(k) - static_cast<double>(half);
    const double x = 2.0 * cutoff * m;
    const double sinc = m == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double ratio = m / static_cast<double>(half);
    const double w = std::cyl_bessel_i(0.0, kBeta * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))) / i0b;
    h[k] = gain * 2.0 * cutoff * sinc * w;
  }
  return h;
}

}  // namespace

RawTrial resample(const RawTrial& x, double fs_out) {
  validate(x);
  if (!(fs_out > 0.0)) throw ValidationError("fs_out must be positive");
  if (fs_out > x.fs) throw ValidationError("resample only downsamples (fs_out <= fs)");
  const Ratio r = rational_ratio(x.fs, fs_out);
  RawTrial out = x;
  out.fs = fs_out;
  if (r.up == r.down) {
    out.samples = x.samples.clone();
    return out;
  }
  const std::size_t C = x.num_channels(), T0 = x.num_samples();
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(T0) * static_cast<double>(r.up) / static_cast<double>(r.down)));
  const std::size_t half = 10 * std::max(r.up, r.down);
  const double cutoff = 0.45 / static_cast<double>(r.down);
  const auto h = kaiser_lowpass(half, cutoff, static_cast<double>(r.up));
  out.samples = Tensor(Shape{C, n_out});
  auto dst = out.samples.mutable_data();
  const auto src = x.samples.data();
  const auto up = static_cast<std::ptrdiff_t>(r.up);
  const auto n_up = static_cast<std::ptrdiff_t>(T0 * r.up);
  for (std::size_t c = 0; c < C; ++c) {
    const double* xs = src.data() + c * T0;
    for (std::size_t m = 0; m < n_out; ++m) {
      // y[m] = sum_k h[k] * x_up[m*down + half - k]
      const auto center = static_cast<std::ptrdiff_t>(m * r.down + half);
      std::ptrdiff_t k0 = center % up;  // first tap hitting a non-zero sample
      double acc = 0.0;
      for (std::ptrdiff_t k = k0; k < static_cast<std::ptrdiff_t>(h.size()); k += up) {
        const std::ptrdiff_t j = center - k;
        if (j < 0) break;
        if (j >= n_up) continue;
        acc += h[static_cast<std::size_t>(k)] * xs[j / up];
      }
      dst[c * n_out + m] = acc;
    }
  }
  return out;
}

Trial car_and_baseline(const RawTrial& x) {
  if (x.samples.rank() != 2 || x.num_channels() < 2) {
    throw ValidationError("CAR needs a [C, T] trial with C >= 2");
  }
  const std::size_t C = x.num_channels(), T = x.num_samples();
  std::vector<double> v(x.samples.data().begin(), x.samples.data().end());
  for (std::size_t t = 0; t < T; ++t) {
    double m = 0.0;
    for (std::size_t c = 0; c < C; ++c) m += v[c * T + t];
    m /= static_cast<double>(C);
    for (std::size_t c = 0; c < C; ++c) v[c * T + t] -= m;
  }
  for (std::size_t c = 0; c < C; ++c) {
    double m = 0.0;
    for (std::size_t t = 0; t < T; ++t) m += v[c * T + t];
    m /= static_cast<double>(T);
    for (std::size_t t = 0; t < T; ++t) v[c * T + t] -= m;
  }
  return {Tensor(Shape{C, T}, std::move(v)), x.fs, x.subject, x.label};
}

Trial preprocess(const RawTrial& x, const PreprocessConfig& cfg) {
  RawTrial y = bandpass_filter(x, cfg.band_lo, cfg.band_hi, cfg.filter_order);
  y = resample(y, cfg.fs_out);
  return car_and_baseline(y);
}

}  // namespace cfspm::signal
