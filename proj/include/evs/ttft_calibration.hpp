#pragma once

// Reference TTFT measurements (seconds) for a 7B and a 14B model: 32 frames
// of 512x512, batch 1, 100 prompt tokens. Row 7 (zero-based) repeats the
// label q=0.30; `q` holds the presumed rate 0.35, `label_q` the original.

#include <array>

namespace evs::calibration {

struct PublishedRow {
  double label_q;
  double q;
  double vlm_7b, llm_7b, latency_7b;
  double vlm_14b, llm_14b, latency_14b;
};

inline constexpr int kTableVersion = 1;
inline constexpr std::size_t kDuplicatedLabelRow = 7;

inline constexpr std::array<PublishedRow, 20> kTtftTable{{
    {0.00, 0.00, 0.3138, 0.1892, 100.07, 0.50528, 0.37860, 101.37},
    {0.05, 0.05, 0.3053, 0.1786, 100.85, 0.48462, 0.35841, 102.52},
    {0.10, 0.10, 0.2950, 0.1679, 101.79, 0.47940, 0.35163, 103.48},
    {0.15, 0.15, 0.2859, 0.1586, 102.47, 0.46073, 0.33251, 103.97},
    {0.20, 0.20, 0.2750, 0.1484, 103.70, 0.43339, 0.30392, 105.40},
    {0.25, 0.25, 0.2711, 0.1393, 103.92, 0.41836, 0.28932, 106.29},
    {0.30, 0.30, 0.2574, 0.1309, 105.37, 0.38660, 0.26041, 107.08},
    {0.30, 0.35, 0.2484, 0.1218, 106.34, 0.36713, 0.23972, 108.32},
    {0.40, 0.40, 0.2407, 0.1117, 106.91, 0.34700, 0.21959, 109.12},
    {0.45, 0.45, 0.2355, 0.1064, 107.61, 0.33732, 0.20949, 110.26},
    {0.50, 0.50, 0.2221, 0.0950, 108.97, 0.31585, 0.18854, 111.57},
    {0.55, 0.55, 0.2084, 0.0820, 107.50, 0.29821, 0.17059, 113.02},
    {0.60, 0.60, 0.2019, 0.0769, 112.23, 0.27560, 0.14865, 114.52},
    {0.65, 0.65, 0.1918, 0.0654, 113.29, 0.25752, 0.12883, 115.81},
    {0.70, 0.70, 0.1828, 0.0561, 114.43, 0.23862, 0.11130, 117.19},
    {0.75, 0.75, 0.1767, 0.0482, 115.17, 0.24182, 0.09358, 115.22},
    {0.80, 0.80, 0.1642, 0.0389, 116.62, 0.20612, 0.07830, 119.31},
    {0.85, 0.85, 0.1583, 0.0320, 117.39, 0.19100, 0.06210, 120.54},
    {0.90, 0.90, 0.1495, 0.0228, 120.34, 0.17178, 0.04421, 123.54},
    {0.95, 0.95, 0.1409, 0.0141, 121.61, 0.15277, 0.02648, 124.92},
}};

}  // namespace evs::calibration
