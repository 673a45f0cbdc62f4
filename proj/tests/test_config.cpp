#include "doctest.h"
#include "mcl/config.hpp"
#include "mcl/errors.hpp"

using namespace mcl;

TEST_CASE("defaults validate") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.contrastive.margin == 0.4);
  CHECK(c.adam.beta1 == 0.0);
  CHECK(c.adam.beta2 == 0.999);
  CHECK(c.task.image_size() == 64);
  CHECK(c.task.grid == 16);
}

TEST_CASE("parse key = value lines") {
  const auto c = parse_config(
      "# comment\n"
      "margin = 0.25\n"
      "  scm=on  # trailing comment\n"
      "loss = infonce\n"
      "layers = 2:2:8,2:2:8,1:1:8\n"
      "task = gradient-shapes\n"
      "steps = 10\n");
  CHECK(c.contrastive.margin == 0.25);
  CHECK(c.scm);
  CHECK(c.loss == LossKind::infonce);
  CHECK(c.feature_dim() == 8);
  CHECK(c.task.kind == TaskKind::gradient_shapes);
  CHECK(c.steps == 10);
}

TEST_CASE("unknown, duplicate and malformed keys are errors") {
  CHECK_THROWS_AS(parse_config("margn = 0.4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("margin = 0.4\nmargin = 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("margin 0.4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("steps = -3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scm = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("layers = 3:2\n"), ConfigError);
}

TEST_CASE("format then parse reproduces the config") {
  auto c = parse_config("margin = 0.3\nscm = on\nlr = 0.00025\nrun_id = abc\nseed = 77\nambiguous = on\n");
  const auto d = parse_config(format_config(c));
  CHECK(format_config(d) == format_config(c));
  CHECK(d.contrastive.margin == 0.3);
  CHECK(d.adam.learning_rate == 0.00025);
  CHECK(d.task.ambiguous);
}

TEST_CASE("inconsistent geometry is rejected at validation") {
  auto c = parse_config("layers = 2:2:16,1:1:16\n");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = parse_config("margin = 1.6\n");
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
