#pragma once

#include <array>
#include <string_view>

namespace audit::risk {

inline constexpr std::string_view kSchemaVersion = "risk-codes/1";

struct Code {
  int value;
  std::string_view label;
};

inline constexpr std::array<Code, 7> kOverallRiskLevels{{{0, "Not identified"},
                                                         {1, "Safe mode"},
                                                         {2, "Low"},
                                                         {3, "Moderate"},
                                                         {4, "Elevated"},
                                                         {5, "High"},
                                                         {6, "Critical"}}};

inline constexpr std::array<Code, 2> kWindowHasRisk{
    {{0, "No risk identified (overall_risk_level = 0)"},
     {1, "Risk identified (overall_risk_level >= 1)"}}};

inline constexpr std::array<Code, 8> kEvidenceSignals{{{1, "Object presence"},
                                                       {2, "Object distance"},
                                                       {3, "Object-lane relation"},
                                                       {4, "Speed"},
                                                       {5, "Steering"},
                                                       {6, "Braking"},
                                                       {7, "Road/environment"},
                                                       {8, "Image input"}}};

inline constexpr std::array<Code, 9> kRiskTypes{{{2, "Pedestrian"},
                                                 {3, "Cyclist"},
                                                 {4, "Rear-end"},
                                                 {5, "Lateral conflict"},
                                                 {6, "Intersection"},
                                                 {7, "Speed"},
                                                 {8, "Visibility"},
                                                 {9, "Infrastructure"},
                                                 {10, "Traffic density"}}};

inline constexpr std::array<Code, 4> kUncertainty{
    {{0, "None"}, {1, "Low"}, {2, "Medium"}, {3, "High"}}};

inline constexpr int kMinLevel = 0;
inline constexpr int kMaxLevel = 6;
inline constexpr int kMinEvidence = 1;
inline constexpr int kMaxEvidence = 8;
inline constexpr int kMinRiskType = 2;
inline constexpr int kMaxRiskType = 10;
inline constexpr int kMaxUncertainty = 3;

inline constexpr int kPedestrian = 2;
inline constexpr int kCyclist = 3;
inline constexpr int kRearEnd = 4;
inline constexpr int kLateralConflict = 5;
inline constexpr int kIntersection = 6;
inline constexpr int kSpeed = 7;
inline constexpr int kVisibility = 8;
inline constexpr int kInfrastructure = 9;
inline constexpr int kTrafficDensity = 10;

inline constexpr int kImageInputSignal = 8;

constexpr bool is_level(int v) noexcept { return v >= kMinLevel && v <= kMaxLevel; }
constexpr bool is_evidence_signal(int v) noexcept { return v >= kMinEvidence && v <= kMaxEvidence; }
constexpr bool is_risk_type(int v) noexcept { return v >= kMinRiskType && v <= kMaxRiskType; }
constexpr bool is_uncertainty(int v) noexcept { return v >= 0 && v <= kMaxUncertainty; }

/// window_has_risk is 1 exactly when a level of 1 or more was assigned.
constexpr int window_has_risk_for(int level) noexcept { return level >= 1 ? 1 : 0; }

}  // namespace audit::risk
