#pragma once

// Reference computations written separately from the library, used to check it.

#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "audit/assessment.hpp"
#include "audit/scene_store.hpp"
#include "audit/tracking.hpp"

namespace audit::test {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);
  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  bool operator==(const Rational& o) const = default;
  bool operator<(const Rational& o) const;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

Rational abs(const Rational& r);

/// Brute-force predicate scan working on the JSON forms of query and states.
std::vector<std::pair<std::string, std::int64_t>> scan_oracle(const SceneStore& store,
                                                              const json& query);

struct MetricOracle {
  Rational mu_risk, rho_high, mu_evidence;
  std::map<int, std::int64_t> factor_dist;
};
MetricOracle metric_oracle(const std::vector<RiskAssessment>& assessments, int tau);

struct DisagreementOracle {
  Rational d_sev, d_esc, d_evi, d_fac, composite;
};
/// Recomputes the four dimensions from raw payload JSON of one window's cohort.
DisagreementOracle disagreement_oracle(const std::vector<json>& payloads, int tau);

/// Minimum total-distance assignment of detections to prior positions, by
/// exhaustive search over every injective partial matching within the gate.
/// Returns, per detection, the index of the matched prior or -1.
std::vector<int> exhaustive_assignment(const std::vector<Detection>& priors,
                                       const std::vector<Detection>& detections, double gate);

}  // namespace audit::test
