#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mcl {

// One evaluation point of one run. `epoch` counts completed optimizer steps.
struct MetricsRow {
  std::string run_id;
  std::uint64_t seed = 0;
  double margin = 0.0;
  bool scm = false;
  std::uint64_t epoch = 0;
  double l1 = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double top1_accuracy = 0.0;
  double loss_total = 0.0;
  double loss_contrastive = 0.0;
  double loss_consistency = 0.0;
  double loss_cycle = 0.0;
  double loss_pseudo = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

// Fixed column order; '.' decimal separator; doubles in shortest
// round-trip form, so parse_metrics_row(format_metrics_row(r)) == r.
const std::string& metrics_csv_header();
std::string format_metrics_row(const MetricsRow& row);
MetricsRow parse_metrics_row(const std::string& line);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

}  // namespace mcl
