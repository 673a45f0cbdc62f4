#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mcl/checkpoint.hpp"
#include "mcl/errors.hpp"
#include "mcl/image.hpp"
#include "mcl/metrics_csv.hpp"
#include "oracles.hpp"

using namespace mcl;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "mclnet_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST_CASE("pnm round trip at 8-bit precision") {
  Rng rng(1);
  for (std::size_t c : {1, 3}) {
    Tensor img = oracle::random_tensor(rng, {5, 7, c}, 0.0, 1.0);
    const fs::path p = temp_path(c == 1 ? "a.pgm" : "a.ppm");
    write_pnm(p, img);
    const Tensor back = read_pnm(p);
    REQUIRE(back.dims() == img.dims());
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(back[i] - img[i]) <= 0.5 / 255.0 + 1e-12);
    write_pnm(p, back);
    CHECK(read_pnm(p) == back);
  }
}

TEST_CASE("pnm header layout and comments") {
  const fs::path p = temp_path("h.pgm");
  write_pnm(p, Tensor({1, 2, 1}, {0.0, 1.0}));
  CHECK(read_bytes(p) == std::string("P5\n2 1\n255\n") + std::string("\x00\xff", 2));
  write_bytes(p, std::string("P5\n# comment\n2 1\n255\n") + std::string("\x10\x20", 2));
  const Tensor t = read_pnm(p);
  CHECK(t[0] == 16.0 / 255.0);
  CHECK(t[1] == 32.0 / 255.0);
}

TEST_CASE("malformed pnm files are rejected") {
  const fs::path p = temp_path("bad.pgm");
  write_bytes(p, "P2\n1 1\n255\n0");
  CHECK_THROWS_AS(read_pnm(p), FormatError);
  write_bytes(p, std::string("P5\n1 1\n65535\n") + std::string("\0\0", 2));
  CHECK_THROWS_AS(read_pnm(p), FormatError);
  write_bytes(p, "P6\n2 2\n255\nabc");
  CHECK_THROWS_AS(read_pnm(p), FormatError);
  CHECK_THROWS_AS(read_pnm(temp_path("missing.pgm")), FormatError);
  CHECK_THROWS_AS(write_pnm(p, Tensor({2, 2, 2})), DimensionError);
}

TEST_CASE("upsample and heatmap") {
  const Tensor u = upsample_nearest(Tensor({1, 2, 1}, {0.25, 0.75}), 2);
  CHECK(u == Tensor({2, 4, 1}, {0.25, 0.25, 0.75, 0.75, 0.25, 0.25, 0.75, 0.75}));
  const Tensor h = heatmap(Tensor({2, 2}, {-1, 0, 1, 3}));
  CHECK(h.dims() == Dims{2, 2, 1});
  CHECK(h[0] == 0.0);
  CHECK(h[1] == 0.25);
  CHECK(h[3] == 1.0);
  CHECK(heatmap(Tensor::filled({2, 2}, 5.0)) == Tensor({2, 2, 1}));
}

TEST_CASE("checkpoint byte layout") {
  NamedTensors t{{"w", Tensor({2}, {1.0, -2.5})}};
  const std::string bytes = serialize_checkpoint(t);
  std::string expected = "MCLN";
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) expected.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto f64 = [&](double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) expected.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  };
  u32(1);
  u32(1);
  u32(1);
  expected += "w";
  u32(1);
  u32(2);
  f64(1.0);
  f64(-2.5);
  CHECK(bytes == expected);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(5);
  NamedTensors t{{"E_X.conv0.kernel", oracle::random_tensor(rng, {2, 2, 3, 4})},
                 {"scalar", Tensor::scalar(std::nextafter(1.0, 2.0))},
                 {"tiny", Tensor({1}, {-4.9e-324})}};
  const fs::path p = temp_path("c.mcln");
  save_checkpoint(p, t);
  CHECK(load_checkpoint(p) == t);
  CHECK(serialize_checkpoint(load_checkpoint(p)) == read_bytes(p));
}

TEST_CASE("corrupt checkpoints are format errors") {
  const std::string good = serialize_checkpoint({{"a", Tensor({2, 2}, {1, 2, 3, 4})}});
  CHECK_THROWS_AS(parse_checkpoint("XXXX" + good.substr(4)), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(good.substr(0, good.size() - 1)), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(good + "x"), FormatError);
  std::string wrong_version = good;
  wrong_version[4] = 2;
  CHECK_THROWS_AS(parse_checkpoint(wrong_version), FormatError);
  CHECK_THROWS_AS(parse_checkpoint(""), FormatError);
  CHECK_THROWS_AS(load_checkpoint(temp_path("nope.mcln")), FormatError);
}

TEST_CASE("metrics rows round trip through csv") {
  Rng rng(9);
  std::vector<MetricsRow> rows;
  for (int i = 0; i < 50; ++i) {
    MetricsRow r;
    r.run_id = "run_" + std::to_string(i);
    r.seed = rng.next();
    r.margin = rng.uniform(0, 1.5);
    r.scm = i % 2 == 0;
    r.epoch = rng.below(100000);
    r.l1 = rng.uniform();
    r.psnr = i == 0 ? 99.0 : rng.uniform(0, 60);
    r.ssim = rng.uniform(-1, 1);
    r.top1_accuracy = rng.uniform();
    r.loss_total = rng.uniform(0, 1e5);
    r.loss_contrastive = 1.0 / 3.0;
    r.loss_consistency = 1e-300;
    r.loss_cycle = rng.normal();
    r.loss_pseudo = 0.1;
    CHECK(parse_metrics_row(format_metrics_row(r)) == r);
    rows.push_back(r);
  }
  std::stringstream ss;
  write_metrics_csv(ss, rows);
  CHECK(ss.str().rfind(metrics_csv_header() + "\n", 0) == 0);
  CHECK(read_metrics_csv(ss) == rows);
}

TEST_CASE("csv header and malformed rows") {
  CHECK(metrics_csv_header() ==
        "run_id,seed,margin,scm,epoch,l1,psnr,ssim,top1_accuracy,loss_total,loss_contrastive,loss_consistency,"
        "loss_cycle,loss_pseudo");
  CHECK_THROWS_AS(parse_metrics_row("a,1,0.4"), FormatError);
  CHECK_THROWS_AS(parse_metrics_row("a,1,0.4,maybe,0,0,0,0,0,0,0,0,0,0"), FormatError);
  CHECK_THROWS_AS(parse_metrics_row("a,x,0.4,on,0,0,0,0,0,0,0,0,0,0"), FormatError);
  std::stringstream bad("not,a,header\n");
  CHECK_THROWS_AS(read_metrics_csv(bad), FormatError);
}
