// SPDX-License-Identifier: Apache-2.0
#include "cfspm/signal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <random>
#include <set>

#include "cfspm/error.hpp"
#include "cfspm/numeric/fft.hpp"

namespace cfspm::signal {

namespace {

constexpr const char* kMontage30[] = {
    "Fp1", "Fp2", "F7",  "F3",  "Fz",  "F4",  "F8",  "FT7", "FC3", "FCz",
    "FC4", "FT8", "T7",  "C3",  "Cz",  "C4",  "T8",  "TP7", "CP3", "CPz",
    "CP4", "TP8", "P7",  "P3",  "Pz",  "P4",  "P8",  "O1",  "Oz",  "O2"};

void check_range(const Range& r, const char* name, double lo, double hi, bool open) {
  const bool inside = open ? (r.first > lo && r.second < hi) : (r.first >= lo && r.second <= hi);
  if (!(r.first <= r.second) || !inside) {
    throw ValidationError(fmt::format("cohort spec: {} range [{}, {}] is invalid", name, r.first,
                                      r.second));
  }
}

double uniform(std::mt19937_64& rng, const Range& r) {
  return std::uniform_real_distribution<double>(r.first, r.second)(rng);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// White Gaussian noise shaped to a 1/f^chi power spectrum, scaled to unit
/// RMS and truncated to n samples.
std::vector<double> aperiodic(std::mt19937_64& rng, std::size_t n, double chi, double fs) {
  const std::size_t m = next_pow2(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> white(m);
  for (double& v : white) v = gauss(rng);
  auto bins = fft::rfft(white);
  bins[0] = 0.0;
  for (std::size_t f = 1; f < bins.size(); ++f) {
    const double hz = static_cast<double>(f) * fs / static_cast<double>(m);
    bins[f] *= std::pow(hz, -0.5 * chi);
  }
  auto shaped = fft::irfft(bins, m);
  shaped.resize(n);
  double ss = 0.0;
  for (double v : shaped) ss += v * v;
  const double rms = std::sqrt(ss / static_cast<double>(n));
  for (double& v : shaped) v /= rms;
  return shaped;
}

}  // namespace

void validate(const CohortSpec& s) {
  if (s.subjects < 1) throw ValidationError("cohort spec: need at least one subject");
  if (s.trials_per_subject < 2 || s.trials_per_subject % 2 != 0) {
    throw ValidationError("cohort spec: trials per subject must be even and >= 2");
  }
  if (s.channels < 2) throw ValidationError("cohort spec: need at least two channels");
  if (!(s.fs > 60.0)) throw ValidationError("cohort spec: fs must exceed 60 Hz");
  if (!(s.duration_s > 0.0)) throw ValidationError("cohort spec: duration must be positive");
  check_range(s.erd_attenuation, "ERD attenuation", 0.0, 1.0, true);
  check_range(s.aperiodic_exponent, "aperiodic exponent", 0.0, 4.0, false);
  check_range(s.subject_gain, "subject gain", 1e-6, 1e6, false);
  check_range(s.lesion_attenuation, "lesion attenuation", 1e-6, 1.0, false);
  if (!(s.mu_hz > 0.0) || !(s.beta_hz > 0.0) || s.beta_hz + s.beta_jitter_hz >= s.fs / 2) {
    throw ValidationError("cohort spec: rhythm frequencies must lie below Nyquist");
  }
  if (s.mu_jitter_hz < 0 || s.beta_jitter_hz < 0 || s.rhythm_jitter < 0 || s.noise_level < 0 ||
      s.background_rms < 0 || s.mu_amplitude < 0 || s.beta_amplitude < 0) {
    throw ValidationError("cohort spec: amplitudes and jitters must be non-negative");
  }
  if (s.left_group.empty() || s.right_group.empty()) {
    throw ValidationError("cohort spec: channel groups must be non-empty");
  }
  std::set<std::size_t> seen;
  for (const auto* g : {&s.left_group, &s.right_group}) {
    for (std::size_t c : *g) {
      if (c >= s.channels) {
        throw ValidationError(fmt::format("cohort spec: group channel {} out of range", c));
      }
      if (!seen.insert(c).second) {
        throw ValidationError("cohort spec: channel groups must be disjoint");
      }
    }
  }
}

std::vector<std::string> channel_names(std::size_t channels) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < channels; ++c) {
    names.push_back(channels == 30 ? std::string(kMontage30[c]) : fmt::format("Ch{}", c + 1));
  }
  return names;
}

std::vector<RawTrial> synthesize_cohort(const CohortSpec& s) {
  validate(s);
  const auto n = static_cast<std::size_t>(std::llround(s.duration_s * s.fs));
  const auto names = channel_names(s.channels);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<RawTrial> out;
  out.reserve(s.subjects * s.trials_per_subject);

  for (std::size_t subj = 0; subj < s.subjects; ++subj) {
    // Each subject gets its own stream so cohorts of different sizes share
    // their leading subjects.
    std::mt19937_64 rng(s.seed * 0x9E3779B97F4A7C15ULL + subj + 1);
    const double chi = uniform(rng, s.aperiodic_exponent);
    const double gain = uniform(rng, s.subject_gain);
    const double mu = s.mu_hz + uniform(rng, {-s.mu_jitter_hz, s.mu_jitter_hz});
    const double beta = s.beta_hz + uniform(rng, {-s.beta_jitter_hz, s.beta_jitter_hz});
    const double lesion = uniform(rng, s.lesion_attenuation);
    const bool lesion_left = std::bernoulli_distribution(0.5)(rng);

    std::vector<int> labels(s.trials_per_subject);
    for (std::size_t t = 0; t < labels.size(); ++t) labels[t] = t < labels.size() / 2 ? 1 : 2;
    std::shuffle(labels.begin(), labels.end(), rng);

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, two_pi);
    const std::string id = fmt::format("S{:02}", subj + 1);

    for (int label : labels) {
      Tensor x({s.channels, n});
      auto xd = x.mutable_data();
      for (std::size_t c = 0; c < s.channels; ++c) {
        const auto bg = aperiodic(rng, n, chi, s.fs);
        for (std::size_t i = 0; i < n; ++i) {
          xd[c * n + i] = s.background_rms * bg[i] + s.noise_level * gauss(rng);
        }
      }
      const double erd = uniform(rng, s.erd_attenuation);
      for (int g = 0; g < 2; ++g) {
        const bool left = g == 0;
        const auto& group = left ? s.left_group : s.right_group;
        // Label 1 (left hand) desynchronizes the right hemisphere.
        const bool contralateral = (label == 1) != left;
        double amp = std::exp(s.rhythm_jitter * gauss(rng));
        if (contralateral) amp *= erd;
        if (left == lesion_left) amp *= lesion;
        const double ph_mu = phase(rng);
        const double ph_beta = phase(rng);
        for (std::size_t c : group) {
          const double ch_mu = ph_mu + 0.3 * gauss(rng);
          const double ch_beta = ph_beta + 0.3 * gauss(rng);
          for (std::size_t i = 0; i < n; ++i) {
            const double tsec = static_cast<double>(i) / s.fs;
            xd[c * n + i] += amp * (s.mu_amplitude * std::sin(two_pi * mu * tsec + ch_mu) +
                                    s.beta_amplitude * std::sin(two_pi * beta * tsec + ch_beta));
          }
        }
      }
      for (double& v : xd) v *= gain;
      out.push_back(RawTrial{std::move(x), s.fs, id, label, names});
    }
  }
  return out;
}

namespace {

Range range_from(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.size() != 2) {
    throw ValidationError(fmt::format("cohort spec: '{}' must be a two-element array", key));
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

CohortSpec cohort_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("cohort spec must be a JSON object");
  CohortSpec s;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "subjects") s.subjects = v.get<std::size_t>();
      else if (key == "trials_per_subject") s.trials_per_subject = v.get<std::size_t>();
      else if (key == "channels") s.channels = v.get<std::size_t>();
      else if (key == "duration_s") s.duration_s = v.get<double>();
      else if (key == "fs") s.fs = v.get<double>();
      else if (key == "erd_attenuation") s.erd_attenuation = range_from(v, "erd_attenuation");
      else if (key == "aperiodic_exponent") s.aperiodic_exponent = range_from(v, "aperiodic_exponent");
      else if (key == "subject_gain") s.subject_gain = range_from(v, "subject_gain");
      else if (key == "lesion_attenuation") s.lesion_attenuation = range_from(v, "lesion_attenuation");
      else if (key == "mu_hz") s.mu_hz = v.get<double>();
      else if (key == "mu_jitter_hz") s.mu_jitter_hz = v.get<double>();
      else if (key == "beta_hz") s.beta_hz = v.get<double>();
      else if (key == "beta_jitter_hz") s.beta_jitter_hz = v.get<double>();
      else if (key == "background_rms") s.background_rms = v.get<double>();
      else if (key == "mu_amplitude") s.mu_amplitude = v.get<double>();
      else if (key == "beta_amplitude") s.beta_amplitude = v.get<double>();
      else if (key == "rhythm_jitter") s.rhythm_jitter = v.get<double>();
      else if (key == "noise_level") s.noise_level = v.get<double>();
      else if (key == "left_group") s.left_group = v.get<std::vector<std::size_t>>();
      else if (key == "right_group") s.right_group = v.get<std::vector<std::size_t>>();
      else if (key == "seed") s.seed = v.get<std::uint64_t>();
      else throw ValidationError("cohort spec: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("cohort spec: ") + e.what());
  }
  validate(s);
  return s;
}

nlohmann::json to_json(const CohortSpec& s) {
  auto pair = [](const Range& r) { return nlohmann::json::array({r.first, r.second}); };
  return {{"subjects", s.subjects},
          {"trials_per_subject", s.trials_per_subject},
          {"channels", s.channels},
          {"duration_s", s.duration_s},
          {"fs", s.fs},
          {"erd_attenuation", pair(s.erd_attenuation)},
          {"aperiodic_exponent", pair(s.aperiodic_exponent)},
          {"subject_gain", pair(s.subject_gain)},
          {"lesion_attenuation", pair(s.lesion_attenuation)},
          {"mu_hz", s.mu_hz},
          {"mu_jitter_hz", s.mu_jitter_hz},
          {"beta_hz", s.beta_hz},
          {"beta_jitter_hz", s.beta_jitter_hz},
          {"background_rms", s.background_rms},
          {"mu_amplitude", s.mu_amplitude},
          {"beta_amplitude", s.beta_amplitude},
          {"rhythm_jitter", s.rhythm_jitter},
          {"noise_level", s.noise_level},
          {"left_group", s.left_group},
          {"right_group", s.right_group},
          {"seed", s.seed}};
}

}  // namespace cfspm::signal
