#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "elliptest/matrix.hpp"
#include "elliptest/rng.hpp"
#include "elliptest/sample.hpp"
#include "elliptest/samplers.hpp"
#include "elliptest/statistics.hpp"
#include "elliptest/tyler.hpp"

using namespace elliptest;

namespace {

spd_matrix test_scatter3() {
  matrix m(3, 3);
  m(0, 0) = 2.0;  m(0, 1) = 0.5;  m(0, 2) = 0.25;
  m(1, 0) = 0.5;  m(1, 1) = 0.8;  m(1, 2) = -0.1;
  m(2, 0) = 0.25; m(2, 1) = -0.1; m(2, 2) = 0.2;
  return spd_matrix(m);
}

}  // namespace

TEST_CASE("the signed basis configuration is an exact fixed point") {
  matrix rows(4, 2);
  rows(0, 0) = 1.0;
  rows(1, 0) = -1.0;
  rows(2, 1) = 1.0;
  rows(3, 1) = -1.0;
  const tyler_result fit = tyler_fit(unit_sample::from_unit_rows(rows));
  REQUIRE(fit.iterations == 1);
  REQUIRE(fit.final_residual == 0.0);
  REQUIRE(frob_dist(fit.estimate.entries(), matrix::identity(2)) == 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      REQUIRE(fit.whitened.point(i)[j] == rows(i, j));
}

TEST_CASE("fits are deterministic and permutation stable") {
  const unit_sample s = sample_acg(test_scatter3(), 80, {13, 0});
  const tyler_result a = tyler_fit(s);
  const tyler_result b = tyler_fit(s);
  REQUIRE(frob_dist(a.estimate.entries(), b.estimate.entries()) == 0.0);
  REQUIRE(a.iterations == b.iterations);

  matrix reversed(s.size(), s.dim());
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.dim(); ++j)
      reversed(i, j) = s.point(s.size() - 1 - i)[j];
  const tyler_result c = tyler_fit(unit_sample::from_unit_rows(reversed));
  REQUIRE(frob_dist(a.estimate.entries(), c.estimate.entries()) < 1e-9);
}

TEST_CASE("estimates converge to the scatter that generated the directions") {
  const spd_matrix omega = test_scatter3();  // trace 3 already
  const unit_sample s = sample_acg(omega, 8000, {77, 0});
  const tyler_result fit = tyler_fit(s);
  REQUIRE(fit.final_residual <= 1e-9);
  REQUIRE(fit.estimate.trace() == Catch::Approx(3.0).margin(1e-10));
  REQUIRE(frob_dist(fit.estimate.entries(), omega.entries()) / omega.entries().frobenius_norm() <
          0.05);
}

TEST_CASE("whitening restores the tight frame identity") {
  const unit_sample s = sample_acg(test_scatter3(), 200, {42, 1});
  const tyler_result fit = tyler_fit(s);
  REQUIRE(trace_s2(fit.whitened) == Catch::Approx(1.0 / 3.0).margin(1e-9));
  REQUIRE(trace_s2(s) > trace_s2(fit.whitened));
}

TEST_CASE("sign flips and power-of-two row scales do not move the estimate") {
  const unit_sample s = sample_acg(test_scatter3(), 60, {99, 0});
  // both fits go through from_raw_rows so the renormalization roundoff on
  // near-unit rows is shared and equality can be exact
  const tyler_result base = tyler_fit_raw(s.rows());

  matrix scaled(s.size(), s.dim());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double c = (i % 2 == 0 ? 2.0 : 0.5) * (i % 3 == 0 ? -1.0 : 1.0);
    for (std::size_t j = 0; j < s.dim(); ++j) scaled(i, j) = c * s.point(i)[j];
  }
  const tyler_result rescaled = tyler_fit_raw(scaled);
  REQUIRE(frob_dist(base.estimate.entries(), rescaled.estimate.entries()) == 0.0);
}

TEST_CASE("estimates transform with the data") {
  const std::size_t p = 3;
  const unit_sample s = sample_acg(test_scatter3(), 60, {123, 5});
  const tyler_result base = tyler_fit(s);

  matrix a(p, p);
  a(0, 0) = 2.0; a(0, 1) = 1.0;  a(0, 2) = 0.0;
  a(1, 0) = 0.0; a(1, 1) = 1.0;  a(1, 2) = -0.5;
  a(2, 0) = 0.5; a(2, 1) = 0.25; a(2, 2) = 1.0;

  const tyler_result moved = tyler_fit_raw(s.rows() * a.transpose());

  matrix expected = a * base.estimate.entries() * a.transpose();
  expected *= static_cast<double>(p) / expected.trace();
  REQUIRE(frob_dist(moved.estimate.entries(), expected) / expected.frobenius_norm() < 1e-6);
}

TEST_CASE("trace target rescales the reported estimate") {
  const unit_sample s = sample_acg(test_scatter3(), 60, {5, 5});
  tyler_config cfg;
  cfg.trace_target = 7.5;
  const tyler_result fit = tyler_fit(s, cfg);
  REQUIRE(fit.estimate.trace() == Catch::Approx(7.5).margin(1e-12));
}

TEST_CASE("fit rejects impossible inputs") {
  REQUIRE_THROWS_AS(tyler_fit(sample_uniform_sphere(3, 3, {1, 0})), not_enough_samples_error);
  REQUIRE_THROWS_AS(tyler_fit(sample_uniform_sphere(1, 10, {1, 0})), not_enough_samples_error);

  tyler_config bad_tol;
  bad_tol.tol = 0.0;
  REQUIRE_THROWS_AS(tyler_fit(sample_uniform_sphere(3, 10, {1, 0}), bad_tol),
                    non_positive_argument_error);

  tyler_config starved;
  starved.max_iters = 1;
  REQUIRE_THROWS_AS(tyler_fit(sample_acg(test_scatter3(), 50, {2, 0}), starved),
                    no_convergence_error);
}

TEST_CASE("rank-deficient samples are reported as degenerate") {
  matrix flat(6, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    const double angle = 0.4 + 0.9 * static_cast<double>(i);
    flat(i, 0) = std::cos(angle);
    flat(i, 1) = std::sin(angle);
    flat(i, 2) = 0.0;
  }
  REQUIRE_THROWS_AS(tyler_fit(unit_sample::from_unit_rows(flat)), degenerate_sample_error);
}

TEST_CASE("raw entry normalizes rows before fitting") {
  const unit_sample s = sample_acg(test_scatter3(), 70, {31, 0});
  const tyler_result via_unit = tyler_fit(s);
  // re-normalizing rows that are already unit length perturbs the last bit,
  // so the two routes agree only to roundoff
  const tyler_result via_raw = tyler_fit_raw(s.rows());
  REQUIRE(frob_dist(via_unit.estimate.entries(), via_raw.estimate.entries()) < 1e-12);
}
