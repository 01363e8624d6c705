#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "evs/detail/rounding.hpp"
#include "evs/error.hpp"
#include "evs/tensor_io.hpp"
#include "evs/ttft_calibration.hpp"

namespace evs::cost {

// --- KV-cache memory ---------------------------------------------------------

struct KVCacheSpec {
  std::uint64_t seq_len = 0;           // S
  std::uint64_t batch = 1;             // B
  std::uint64_t prefill_queue = 0;     // Q
  std::uint64_t kv_dim_per_token = 0;  // D_kv
  std::uint32_t kv_elem_bytes = 2;     // s_kv
  std::uint32_t weight_elem_bytes = 2; // s_w
  std::uint64_t model_dim = 0;         // d_model
  std::uint64_t attn_params = 0;       // P
  bool query_prefill = false;          // delta

  void validate() const {
    const auto ok = [](std::uint32_t b) { return b == 1 || b == 2 || b == 4 || b == 8; };
    require(ok(kv_elem_bytes), "kv element size must be 1, 2, 4 or 8 bytes");
    require(ok(weight_elem_bytes), "weight element size must be 1, 2, 4 or 8 bytes");
  }
};

inline constexpr double kBytesPerMiB = 1048576.0;  // 2^20

/// M_kv = S * (B + Q) * D_kv * s_kv / 2^20, in MiB.
inline double kv_cache_memory(const KVCacheSpec& s) {
  s.validate();
  const double tokens = static_cast<double>(s.seq_len) *
                        static_cast<double>(s.batch + s.prefill_queue);
  return tokens * static_cast<double>(s.kv_dim_per_token) *
         static_cast<double>(s.kv_elem_bytes) / kBytesPerMiB;
}

/// M = M_kv + (delta * S * d_model * s_w + P * s_w) / 2^20, in MiB.
inline double total_attention_memory(const KVCacheSpec& s) {
  const double query = s.query_prefill ? static_cast<double>(s.seq_len) *
                                             static_cast<double>(s.model_dim) *
                                             static_cast<double>(s.weight_elem_bytes)
                                       : 0.0;
  const double weights =
      static_cast<double>(s.attn_params) * static_cast<double>(s.weight_elem_bytes);
  return kv_cache_memory(s) + (query + weights) / kBytesPerMiB;
}

/// Sequence length after pruning: round((1-q) * prunable vision tokens) plus
/// the never-pruned anchor tokens plus text. With anchor_tokens = 0 this is
/// round((1-q) * vision) + text.
inline std::uint64_t pruned_seq_len(std::uint64_t total_vision_tokens, double q,
                                    std::uint64_t text_tokens,
                                    std::uint64_t anchor_tokens = 0) {
  require(q >= 0.0 && q < 1.0, "pruning rate must lie in [0, 1)");
  require(anchor_tokens <= total_vision_tokens, "anchor exceeds vision tokens");
  return anchor_tokens + detail::kept_count(q, total_vision_tokens - anchor_tokens) +
         text_tokens;
}

// --- TTFT calibration --------------------------------------------------------

struct LatencyRow {
  double label_q;  // as published
  double q;        // effective pruning rate
  double ttft_vlm;
  double ttft_llm;
  double latency;
};

struct LatencyTable {
  std::string model;
  std::vector<LatencyRow> rows;

  void validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      require(r.q >= 0.0 && r.q < 1.0, "table rate outside [0, 1)");
      require(r.ttft_vlm > 0 && r.ttft_llm > 0 && r.latency > 0, "table times must be > 0");
      if (i > 0) require(rows[i - 1].q < r.q, "table rows must ascend strictly in q");
    }
  }
};

enum class TtftColumn { llm, vlm };

inline std::string_view to_string(TtftColumn c) { return c == TtftColumn::llm ? "llm" : "vlm"; }

inline double ttft(const LatencyRow& r, TtftColumn c) {
  return c == TtftColumn::llm ? r.ttft_llm : r.ttft_vlm;
}

inline const std::vector<std::string>& model_tags() {
  static const std::vector<std::string> tags{"7B", "14B"};
  return tags;
}

inline LatencyTable embedded_table(std::string_view model_tag) {
  LatencyTable t;
  t.model = std::string(model_tag);
  const bool small = model_tag == "7B";
  if (!small && model_tag != "14B")
    fail(ErrorCode::invalid_argument,
         "unknown model tag '" + std::string(model_tag) + "' (expected 7B or 14B)");
  for (const auto& p : calibration::kTtftTable)
    t.rows.push_back(small ? LatencyRow{p.label_q, p.q, p.vlm_7b, p.llm_7b, p.latency_7b}
                           : LatencyRow{p.label_q, p.q, p.vlm_14b, p.llm_14b, p.latency_14b});
  return t;
}

// Calibration file: kind=meta table, one row per published row.
inline io::MetaTable calibration_file_table() {
  io::MetaTable t;
  t.columns = {"label_q",    "q",          "ttft_vlm_7B",  "ttft_llm_7B",
               "latency_7B", "ttft_vlm_14B", "ttft_llm_14B", "latency_14B"};
  for (const auto& p : calibration::kTtftTable)
    t.rows.push_back({p.label_q, p.q, p.vlm_7b, p.llm_7b, p.latency_7b, p.vlm_14b,
                      p.llm_14b, p.latency_14b});
  t.meta = {{"source", "published TTFT benchmark table, verbatim"},
            {"version", calibration::kTableVersion},
            {"units", "seconds"},
            {"models", {"7B", "14B"}},
            {"annotations",
             {{{"row", calibration::kDuplicatedLabelRow},
               {"note", "published label q=0.30 duplicates the previous row; presumed q=0.35"}}}}};
  return t;
}

inline LatencyTable table_from_file(const io::MetaTable& file, std::string_view model_tag) {
  const auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < file.columns.size(); ++i)
      if (file.columns[i] == name) return i;
    fail(ErrorCode::invalid_argument, "calibration file lacks column '" + name + "'");
  };
  const std::string tag(model_tag);
  const std::size_t iq = col("q"), il = col("label_q"), iv = col("ttft_vlm_" + tag),
                    ii = col("ttft_llm_" + tag), ie = col("latency_" + tag);
  LatencyTable t;
  t.model = tag;
  for (const auto& r : file.rows) t.rows.push_back({r[il], r[iq], r[iv], r[ii], r[ie]});
  t.validate();
  return t;
}

struct LinearFit {
  double intercept = 0.0;  // seconds
  double slope = 0.0;      // seconds per unit kept fraction
  double r_squared = 0.0;

  double predict(double kept_fraction) const { return intercept + slope * kept_fraction; }
};

/// Least-squares line of TTFT against kept fraction (1 - q).
inline LinearFit fit_ttft_model(const LatencyTable& table, TtftColumn column) {
  if (table.rows.size() < 3)
    fail(ErrorCode::insufficient_data, "a TTFT fit needs at least 3 rows, got " +
                                           std::to_string(table.rows.size()));
  const double n = static_cast<double>(table.rows.size());
  double mx = 0.0, my = 0.0;
  for (const auto& r : table.rows) {
    mx += 1.0 - r.q;
    my += ttft(r, column);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& r : table.rows) {
    const double dx = (1.0 - r.q) - mx, dy = ttft(r, column) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) fail(ErrorCode::insufficient_data, "all rows share one pruning rate");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (const auto& r : table.rows) {
    const double e = ttft(r, column) - f.predict(1.0 - r.q);
    ss_res += e * e;
  }
  f.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return f;
}

inline const LatencyRow* find_row(const LatencyTable& table, double q) {
  for (const auto& r : table.rows)
    if (std::fabs(r.q - q) < 1e-9) return &r;
  return nullptr;
}

/// TTFT(no pruning) / TTFT(q) from the table; empty when q is not a row.
inline std::optional<double> measured_speedup(const LatencyTable& table, TtftColumn column,
                                              double q) {
  const LatencyRow* base = find_row(table, 0.0);
  const LatencyRow* row = find_row(table, q);
  if (base == nullptr || row == nullptr) return std::nullopt;
  return ttft(*base, column) / ttft(*row, column);
}

inline double predicted_speedup(const LinearFit& fit, double q) {
  return fit.predict(1.0) / fit.predict(1.0 - q);
}

struct SpeedupRow {
  double q = 0.0;
  std::optional<double> measured_llm, measured_vlm;
  double predicted_llm = 0.0, predicted_vlm = 0.0;
};

struct SpeedupReport {
  std::string model;
  LinearFit llm_fit, vlm_fit;
  std::vector<SpeedupRow> rows;
  std::vector<std::string> notes;
};

inline SpeedupReport speedup_report(const std::vector<double>& q_list, const LatencyTable& table) {
  table.validate();
  SpeedupReport rep;
  rep.model = table.model;
  rep.llm_fit = fit_ttft_model(table, TtftColumn::llm);
  rep.vlm_fit = fit_ttft_model(table, TtftColumn::vlm);
  for (double q : q_list) {
    require(q >= 0.0 && q < 1.0, "pruning rate must lie in [0, 1)");
    SpeedupRow r;
    r.q = q;
    r.measured_llm = measured_speedup(table, TtftColumn::llm, q);
    r.measured_vlm = measured_speedup(table, TtftColumn::vlm, q);
    r.predicted_llm = predicted_speedup(rep.llm_fit, q);
    r.predicted_vlm = predicted_speedup(rep.vlm_fit, q);
    rep.rows.push_back(r);
    if (std::fabs(q - 0.9) < 1e-9 && r.measured_llm)
      rep.notes.push_back("q=0.90: table-derived LLM speedup is " +
                          [&] {
                            std::ostringstream s;
                            s << std::fixed << std::setprecision(2) << *r.measured_llm;
                            return s.str();
                          }() +
                          "x; a 13x figure for this rate does not follow from the calibration data");
  }
  return rep;
}

inline SpeedupReport speedup_report(const std::vector<double>& q_list, std::string_view model_tag) {
  return speedup_report(q_list, embedded_table(model_tag));
}

inline std::string format_speedup_text(const SpeedupReport& rep) {
  std::ostringstream o;
  o << std::fixed;
  o << "model " << rep.model << "\n";
  o << std::setprecision(5) << "llm fit: ttft = " << rep.llm_fit.intercept << " + "
    << rep.llm_fit.slope << " * kept  (r2 " << std::setprecision(5) << rep.llm_fit.r_squared
    << ")\n";
  o << "vlm fit: ttft = " << rep.vlm_fit.intercept << " + " << rep.vlm_fit.slope
    << " * kept  (r2 " << rep.vlm_fit.r_squared << ")\n";
  o << "q      llm_measured  llm_predicted  vlm_measured  vlm_predicted\n";
  const auto cell = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) s << std::fixed << std::setprecision(2) << *v << "x";
    else s << "n/a";
    return s.str();
  };
  for (const auto& r : rep.rows) {
    std::ostringstream pl, pv;
    pl << std::fixed << std::setprecision(2) << r.predicted_llm << "x";
    pv << std::fixed << std::setprecision(2) << r.predicted_vlm << "x";
    o << std::setprecision(2) << std::left << std::setw(7) << r.q << std::setw(14)
      << cell(r.measured_llm) << std::setw(15) << pl.str() << std::setw(14)
      << cell(r.measured_vlm) << pv.str() << "\n";
  }
  for (const auto& n : rep.notes) o << "note: " << n << "\n";
  return o.str();
}

inline std::string format_speedup_csv(const SpeedupReport& rep) {
  std::ostringstream o;
  o << std::setprecision(10);
  o << "model,q,llm_measured,llm_predicted,vlm_measured,vlm_predicted\n";
  for (const auto& r : rep.rows) {
    o << rep.model << "," << r.q << ",";
    if (r.measured_llm) o << *r.measured_llm;
    o << "," << r.predicted_llm << ",";
    if (r.measured_vlm) o << *r.measured_vlm;
    o << "," << r.predicted_vlm << "\n";
  }
  return o.str();
}

}  // namespace evs::cost
