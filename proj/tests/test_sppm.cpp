// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "cfspm/error.hpp"
#include "cfspm/gradcheck.hpp"
#include "cfspm/sppm.hpp"
#include "oracles.hpp"

namespace cfspm {
namespace {

PrivateSignature sig(std::vector<double> v) {
  double n = 0.0;
  for (double e : v) n += e * e;
  for (double& e : v) e /= std::sqrt(n);
  return {v, false};
}

// Two channels per group; every sample of a group's channels is +-amp, so
// the time-mean square of the group is amp^2.
Tensor two_group_trial(double left_amp, double right_amp) {
  Tensor x({4, 10});
  for (std::size_t t = 0; t < 10; ++t) {
    const double s = t % 2 == 0 ? 1.0 : -1.0;
    x.mutable_data()[0 * 10 + t] = s * left_amp;
    x.mutable_data()[1 * 10 + t] = -s * left_amp;
    x.mutable_data()[2 * 10 + t] = s * right_amp;
    x.mutable_data()[3 * 10 + t] = s * right_amp;
  }
  return x;
}

const ChannelGroups kGroups{{0, 1}, {2, 3}};

TEST(Signature, EqualPowerGivesZeroAsymmetry) {
  const PrivateSignature s = extract_signature(two_group_trial(1.5, 1.5), kGroups);
  EXPECT_FALSE(s.degenerate);
  EXPECT_NEAR(s.rho[0], 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(s.rho[1], 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(s.rho[2], 0.0);
}

TEST(Signature, GroupPowersFourAndOne) {
  const PrivateSignature s = extract_signature(two_group_trial(2.0, 1.0), kGroups);
  const double n = std::sqrt(26.0);
  EXPECT_NEAR(s.rho[0], 4.0 / n, 1e-12);
  EXPECT_NEAR(s.rho[1], 1.0 / n, 1e-12);
  EXPECT_NEAR(s.rho[2], 3.0 / n, 1e-12);
}

TEST(Signature, ZeroTrialFallsBackToUniformWithWarning) {
  std::vector<std::string> warnings;
  set_warning_sink([&](const std::string& w) { warnings.push_back(w); });
  const PrivateSignature s = extract_signature(Tensor({4, 10}), kGroups);
  set_warning_sink({});
  EXPECT_TRUE(s.degenerate);
  for (double v : s.rho) EXPECT_NEAR(v, 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Signature, UnitNormAndNonNegative) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const PrivateSignature s = extract_signature(oracle::uniform({4, 50}, rng, -3, 3), kGroups);
    double n = 0.0;
    for (double v : s.rho) {
      EXPECT_GE(v, 0.0);
      n += v * v;
    }
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-9);
  }
  const auto all = extract_signatures(oracle::uniform({3, 4, 50}, rng), kGroups);
  EXPECT_EQ(all.size(), 3u);
}

TEST(Signature, Errors) {
  EXPECT_THROW(extract_signature(Tensor({4, 10}), ChannelGroups{{}, {1}}), ValidationError);
  EXPECT_THROW(extract_signature(Tensor({4, 10}), ChannelGroups{{0}, {4}}), ValidationError);
  EXPECT_THROW(extract_signature(Tensor({4, 10}), ChannelGroups{{0, 1}, {1}}), ValidationError);
}

TEST(Prototypes, SingletonClass) {
  const std::vector<PrivateSignature> s{sig({1, 2, 2}), sig({3, 0, 4})};
  const std::vector<std::int64_t> y{1, 2};
  const PrototypeMemory m = build_prototypes(s, y, 2);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_LT(oracle::max_abs_diff(m.classes[k].centroid, s[k].rho), 1e-15);
    EXPECT_NEAR(m.classes[k].mu, 1.0, 1e-15);
    EXPECT_NEAR(m.classes[k].sigma, 0.0, 1e-7);
    EXPECT_NEAR(m.classes[k].delta, 1.0, 1e-7);
  }
}

TEST(Prototypes, TwoOrthogonalSignatures) {
  const std::vector<PrivateSignature> s{sig({1, 0, 0}), sig({0, 1, 0}), sig({0, 0, 1})};
  const std::vector<std::int64_t> y{1, 1, 2};
  const PrototypeMemory m = build_prototypes(s, y, 2);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_LT(oracle::max_abs_diff(m.classes[0].centroid, std::vector<double>{h, h, 0.0}), 1e-15);
  EXPECT_NEAR(m.classes[0].mu, h, 1e-15);
  EXPECT_NEAR(m.classes[0].sigma, 0.0, 1e-12);
  EXPECT_NEAR(m.classes[0].delta, h, 1e-12);
}

TEST(Prototypes, FloorAppliesWhenToleranceIsLow) {
  const std::vector<PrivateSignature> s{sig({1, 0, 0}), sig({0, 1, 0}), sig({0, 0, 1}),
                                        sig({1, 1, 1})};
  const std::vector<std::int64_t> y{1, 1, 1, 2};
  const PrototypeMemory m = build_prototypes(s, y, 2, 0.6);
  const double mu = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(m.classes[0].mu, mu, 1e-12);
  EXPECT_LT(mu, 0.6);
  EXPECT_EQ(m.classes[0].delta, 0.6);
  EXPECT_EQ(m.classes[1].delta, 1.0);
  EXPECT_EQ(m.delta_min, 0.6);
}

// Three copies of e1 and one unit vector at angle phi from it. Bisection on
// phi against a direct recomputation of mu and sigma lands mu - sigma on
// 0.3; the memory must then floor the tolerance to 0.5.
TEST(Prototypes, FloorRaisesToleranceOfPointThree) {
  auto stats = [](const std::vector<PrivateSignature>& s) {
    std::vector<double> c(3, 0.0);
    for (const auto& p : s)
      for (std::size_t i = 0; i < 3; ++i) c[i] += p.rho[i];
    double n = 0.0;
    for (double v : c) n += v * v;
    for (double& v : c) v /= std::sqrt(n);
    double mu = 0.0, m2 = 0.0;
    for (const auto& p : s) {
      const double u = p.rho[0] * c[0] + p.rho[1] * c[1] + p.rho[2] * c[2];
      mu += u;
      m2 += u * u;
    }
    mu /= static_cast<double>(s.size());
    m2 /= static_cast<double>(s.size());
    return std::pair{mu, std::sqrt(std::max(0.0, m2 - mu * mu))};
  };
  auto members = [](double phi) {
    return std::vector<PrivateSignature>{sig({1, 0, 0}), sig({1, 0, 0}), sig({1, 0, 0}),
                                         sig({std::cos(phi), std::sin(phi), 0})};
  };
  double lo = 0.0, hi = M_PI;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const auto [mu, sd] = stats(members(mid));
    (mu - sd > 0.3 ? lo : hi) = mid;
  }
  auto s = members(lo);
  const auto [mu, sd] = stats(s);
  ASSERT_NEAR(mu - sd, 0.3, 1e-9);
  s.push_back(sig({0, 0, 1}));
  const std::vector<std::int64_t> y{1, 1, 1, 1, 2};
  const PrototypeMemory m = build_prototypes(s, y, 2, 0.5);
  EXPECT_NEAR(m.classes[0].mu - m.classes[0].sigma, 0.3, 1e-9);
  EXPECT_EQ(m.classes[0].delta, 0.5);
}

TEST(Prototypes, MatchBruteForceOnRandomSets) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PrivateSignature> s;
    std::vector<std::int64_t> y;
    for (int k = 1; k <= 2; ++k) {
      for (int i = count(rng); i > 0; --i) {
        s.push_back(sig({u(rng) + 1e-3, u(rng), u(rng)}));
        y.push_back(k);
      }
    }
    const double delta_min = 0.5 * u(rng);
    const PrototypeMemory m = build_prototypes(s, y, 2, delta_min);
    for (int k = 1; k <= 2; ++k) {
      std::vector<double> c(3, 0.0);
      double count_k = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != k) continue;
        count_k += 1.0;
        for (std::size_t d = 0; d < 3; ++d) c[d] += s[i].rho[d];
      }
      double n = 0.0;
      for (double& v : c) {
        v /= count_k;
        n += v * v;
      }
      for (double& v : c) v /= std::sqrt(n);
      double mu = 0.0;
      std::vector<double> cos;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != k) continue;
        cos.push_back(s[i].rho[0] * c[0] + s[i].rho[1] * c[1] + s[i].rho[2] * c[2]);
        mu += cos.back();
      }
      mu /= count_k;
      double var = 0.0;
      for (double v : cos) var += (v - mu) * (v - mu);
      const double sd = std::sqrt(var / count_k);
      const Prototype& p = m.classes[static_cast<std::size_t>(k - 1)];
      EXPECT_LT(oracle::max_abs_diff(p.centroid, c), 1e-12);
      EXPECT_NEAR(p.mu, mu, 1e-12);
      EXPECT_NEAR(p.sigma, sd, 1e-12);
      EXPECT_NEAR(p.delta, std::max(delta_min, mu - sd), 1e-12);
      EXPECT_GE(p.delta, delta_min);
      EXPECT_LE(p.delta, 1.0);
    }
  }
}

TEST(Prototypes, InvariantToSignatureScale) {
  std::mt19937_64 rng(3);
  std::vector<Tensor> trials;
  std::vector<std::int64_t> y;
  for (int i = 0; i < 8; ++i) {
    trials.push_back(oracle::uniform({4, 30}, rng, -1, 1));
    y.push_back(1 + i % 2);
  }
  std::vector<PrivateSignature> a, b;
  for (const Tensor& t : trials) {
    a.push_back(extract_signature(t, kGroups));
    b.push_back(extract_signature(ops::scale(t, 37.0), kGroups));
  }
  const PrototypeMemory ma = build_prototypes(a, y, 2), mb = build_prototypes(b, y, 2);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_LT(oracle::max_abs_diff(ma.classes[k].centroid, mb.classes[k].centroid), 1e-12);
    EXPECT_NEAR(ma.classes[k].mu, mb.classes[k].mu, 1e-12);
    EXPECT_NEAR(ma.classes[k].sigma, mb.classes[k].sigma, 1e-7);
    EXPECT_NEAR(ma.classes[k].delta, mb.classes[k].delta, 1e-7);
  }
}

TEST(Prototypes, Errors) {
  const std::vector<PrivateSignature> s{sig({1, 0, 0}), sig({0, 1, 0})};
  EXPECT_THROW(build_prototypes(s, std::vector<std::int64_t>{1, 1}, 2), ValidationError);
  EXPECT_THROW(build_prototypes(s, std::vector<std::int64_t>{1}, 2), ShapeError);
  EXPECT_THROW(build_prototypes(s, std::vector<std::int64_t>{1, 3}, 2), ValidationError);
}

// Memory with centroid e1 for both classes, so u is the first component
// of the trial signature, and tolerances set directly.
PrototypeMemory fixed_memory(double delta1, double delta2) {
  PrototypeMemory m;
  m.classes = {{{1, 0, 0}, 1, 0, delta1}, {{1, 0, 0}, 1, 0, delta2}};
  return m;
}

PrivateSignature with_consistency(double u) { return {{u, std::sqrt(1.0 - u * u), 0.0}, false}; }

TEST(Gate, WorkedExamples) {
  const PrototypeMemory m = fixed_memory(0.8, 0.8);
  const std::vector<std::vector<double>> q{{0.7, 0.3}, {0.55, 0.45}, {0.55, 0.45}};
  const std::vector<PrivateSignature> s{with_consistency(0.9), with_consistency(0.9),
                                        with_consistency(1.0)};
  const PseudoLabelState st = gate_pseudo_labels(q, s, m, 0.6);
  EXPECT_TRUE(st.trials[0].accepted);
  EXPECT_EQ(st.trials[0].pseudo, 1);
  EXPECT_EQ(st.trials[0].y_hat, 1);
  EXPECT_NEAR(st.trials[0].u, 0.9, 1e-15);
  EXPECT_EQ(st.trials[0].delta, 0.8);
  EXPECT_FALSE(st.trials[1].accepted);
  EXPECT_FALSE(st.trials[2].accepted);
  EXPECT_FALSE(st.trials[1].pseudo.has_value());
  EXPECT_EQ(st.accepted, (std::vector<std::size_t>{0}));
}

TEST(Gate, MatchesIndicatorEnumeration) {
  std::vector<double> rs, us, ds;
  for (int i = 0; i < 10; ++i) rs.push_back(0.5 + 0.49 * i / 9.0);
  for (int i = 0; i <= 10; ++i) us.push_back(i / 10.0);
  for (int i = 0; i < 8; ++i) ds.push_back(0.3 + 0.1 * i);
  const double tau = 0.6;
  std::size_t checked = 0;
  for (double d : ds) {
    for (int cls = 1; cls <= 2; ++cls) {
      const PrototypeMemory m = fixed_memory(cls == 1 ? d : 0.0, cls == 2 ? d : 0.0);
      std::vector<std::vector<double>> q;
      std::vector<PrivateSignature> s;
      for (double r : rs) {
        for (double u : us) {
          q.push_back(cls == 1 ? std::vector<double>{r, 1 - r} : std::vector<double>{1 - r, r});
          s.push_back(with_consistency(u));
        }
      }
      const PseudoLabelState st = gate_pseudo_labels(q, s, m, tau);
      std::size_t i = 0;
      for (double r : rs) {
        for (double u : us) {
          const TrialGate& g = st.trials[i++];
          const bool confident = q[i - 1][static_cast<std::size_t>(cls - 1)] >= tau;
          // r=0.5 is a tie that resolves to class 1.
          const int y_hat = r == 0.5 ? 1 : cls;
          const double delta = y_hat == cls ? d : 0.0;
          const bool consistent = s[i - 1].rho[0] >= delta;
          EXPECT_EQ(g.y_hat, y_hat);
          EXPECT_EQ(g.r, std::max(q[i - 1][0], q[i - 1][1]));
          EXPECT_EQ(g.accepted, confident && consistent) << r << " " << u << " " << d;
          EXPECT_EQ(g.pseudo.has_value(), g.accepted);
          ++checked;
        }
      }
    }
  }
  EXPECT_EQ(checked, 10u * 11u * 8u * 2u);
}

TEST(Gate, MonotoneInConfidenceAndConsistency) {
  const PrototypeMemory m = fixed_memory(0.7, 0.7);
  for (double r = 0.5; r < 1.0; r += 0.05) {
    for (double u = 0.0; u <= 1.0; u += 0.05) {
      const std::vector<std::vector<double>> q{{r, 1 - r}, {std::min(1.0, r + 0.05), 1 - std::min(1.0, r + 0.05)},
                                               {r, 1 - r}};
      const std::vector<PrivateSignature> s{with_consistency(u), with_consistency(u),
                                            with_consistency(std::min(1.0, u + 0.05))};
      const PseudoLabelState st = gate_pseudo_labels(q, s, m, 0.6);
      if (st.trials[0].accepted) {
        EXPECT_TRUE(st.trials[1].accepted);
        EXPECT_TRUE(st.trials[2].accepted);
      }
    }
  }
}

TEST(Gate, TiesGoToTheLowestClass) {
  const PrototypeMemory m = fixed_memory(0.0, 0.0);
  const std::vector<std::vector<double>> q{{0.5, 0.5}};
  const std::vector<PrivateSignature> s{with_consistency(1.0)};
  EXPECT_EQ(gate_pseudo_labels(q, s, m, 0.5).trials[0].y_hat, 1);
}

TEST(Gate, ConfidenceOnlyIgnoresConsistency) {
  const PrototypeMemory m = fixed_memory(0.99, 0.99);
  const std::vector<std::vector<double>> q{{0.9, 0.1}};
  const std::vector<PrivateSignature> s{with_consistency(0.1)};
  EXPECT_FALSE(gate_pseudo_labels(q, s, m, 0.6).trials[0].accepted);
  EXPECT_TRUE(gate_pseudo_labels(q, s, m, 0.6, false).trials[0].accepted);
}

TEST(Gate, Errors) {
  const PrototypeMemory m = fixed_memory(0.5, 0.5);
  const std::vector<PrivateSignature> s{with_consistency(1.0)};
  EXPECT_THROW(gate_pseudo_labels(std::vector<std::vector<double>>{{0.3, 0.3, 0.4}}, s, m, 0.6),
               ShapeError);
  EXPECT_THROW(gate_pseudo_labels(std::vector<std::vector<double>>{{0.7, 0.7}}, s, m, 0.6),
               ValidationError);
  EXPECT_THROW(gate_pseudo_labels(std::vector<std::vector<double>>{{0.7, 0.3}, {0.7, 0.3}}, s, m,
                                  0.6),
               ShapeError);
}

TEST(Refresh, DeterministicAndEmptyForZeroLogits) {
  const ModelConfig cfg = gradcheck_config();
  ModelParams p = init_model(cfg, 4);
  std::mt19937_64 rng(5);
  const Tensor target = oracle::uniform({6, 4, 120}, rng);
  const auto sigs = extract_signatures(target, kGroups);
  PrototypeMemory m = fixed_memory(0.0, 0.0);
  m.classes[0].centroid = m.classes[1].centroid = sigs[0].rho;
  const PseudoLabelState a = refresh_pseudo_state(p, cfg, target, sigs, m, 0.5);
  const PseudoLabelState b = refresh_pseudo_state(p, cfg, target, sigs, m, 0.5);
  EXPECT_EQ(a.accepted, b.accepted);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(a.trials[j].q, b.trials[j].q);
  const auto probs = predict_proba(target, p, cfg, 4);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(probs[j], a.trials[j].q);

  p.cls_w = Tensor(p.cls_w.shape());
  p.cls_b = Tensor(p.cls_b.shape());
  EXPECT_TRUE(refresh_pseudo_state(p, cfg, target, sigs, m, 0.6).accepted.empty());
}

}  // namespace
}  // namespace cfspm
