#include <doctest.h>

#include "property_suite.hpp"

using namespace vamh::testing;

namespace {

// Reduced sizes; the acceptance binary runs the full suite.
PropertyOptions quick() {
  PropertyOptions o;
  o.seed = 777;
  o.instances = 20;
  o.horizon = 30;
  o.transitions = 20000;
  o.r_bound_points = 100000;
  o.gradient_points = 200;
  o.chain_steps = 200000;
  return o;
}

void expect(const PropertyResult& r) {
  INFO(r.name << ": " << r.detail);
  CHECK(r.passed);
}

}  // namespace

TEST_CASE("property: TV bounds hold on random discrete instances") {
  expect(check_composition_bounds(quick()));
  expect(check_mixing_bounds(quick()));
  expect(check_mixing_matrix_inequality(quick()));
  expect(check_cwis_bounds(quick()));
}

TEST_CASE("property: split identities") {
  expect(check_split_identity_mty(quick()));
  expect(check_split_identity_cwis(quick()));
}

TEST_CASE("property: regeneration probabilities and reduced acceptances") {
  expect(check_regen_range_toy(quick()));
  expect(check_regen_range_glmm(quick()));
  expect(check_reduced_acceptance_toy(quick()));
  expect(check_reduced_acceptance_glmm(quick()));
}

TEST_CASE("property: GLMM gradient and likelihood-ratio bound") {
  expect(check_glmm_gradient(quick()));
  expect(check_r_bound(quick()));
}

TEST_CASE("property: regenerative structure") {
  expect(check_rs_identity(quick()));
  expect(check_tour_independence(quick()));
}
