#include "mcl/metrics_csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "mcl/errors.hpp"

namespace mcl {

const std::string& metrics_csv_header() {
  static const std::string header =
      "run_id,seed,margin,scm,epoch,l1,psnr,ssim,top1_accuracy,loss_total,loss_contrastive,loss_consistency,"
      "loss_cycle,loss_pseudo";
  return header;
}

namespace {

template <typename T>
void append_number(std::string& out, T v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw FormatError("number formatting failed");
  out.append(buf, end);
}

template <typename T>
T parse_number(const std::string& field, const char* what) {
  T v{};
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || end != field.data() + field.size()) {
    throw FormatError(std::string("metrics csv: bad ") + what + " '" + field + "'");
  }
  return v;
}

}  // namespace

std::string format_metrics_row(const MetricsRow& r) {
  if (r.run_id.find_first_of(",\n\r\"") != std::string::npos) {
    throw FormatError("metrics csv: run id must not contain commas, quotes or newlines");
  }
  std::string out = r.run_id;
  out += ',';
  append_number(out, r.seed);
  out += ',';
  append_number(out, r.margin);
  out += r.scm ? ",on," : ",off,";
  append_number(out, r.epoch);
  for (double v : {r.l1, r.psnr, r.ssim, r.top1_accuracy, r.loss_total, r.loss_contrastive, r.loss_consistency,
                   r.loss_cycle, r.loss_pseudo}) {
    out += ',';
    append_number(out, v);
  }
  return out;
}

MetricsRow parse_metrics_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  if (f.size() != 14) throw FormatError("metrics csv: expected 14 fields, got " + std::to_string(f.size()));
  MetricsRow r;
  r.run_id = f[0];
  r.seed = parse_number<std::uint64_t>(f[1], "seed");
  r.margin = parse_number<double>(f[2], "margin");
  if (f[3] != "on" && f[3] != "off") throw FormatError("metrics csv: scm must be on/off, got '" + f[3] + "'");
  r.scm = f[3] == "on";
  r.epoch = parse_number<std::uint64_t>(f[4], "epoch");
  double* doubles[] = {&r.l1, &r.psnr, &r.ssim, &r.top1_accuracy, &r.loss_total, &r.loss_contrastive,
                       &r.loss_consistency, &r.loss_cycle, &r.loss_pseudo};
  for (std::size_t i = 0; i < 9; ++i) *doubles[i] = parse_number<double>(f[5 + i], "value");
  return r;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << metrics_csv_header() << '\n';
  for (const auto& r : rows) out << format_metrics_row(r) << '\n';
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header()) throw FormatError("metrics csv: missing header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_metrics_row(line));
  }
  return rows;
}

}  // namespace mcl
