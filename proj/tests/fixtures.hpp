#pragma once

// Coupling fixtures and the atom-jitter perturbation shared by the
// approximation tests and the acceptance binary.

#include <string>
#include <vector>

#include "mot/convex_order.hpp"
#include "mot/couplings.hpp"
#include "support.hpp"

namespace fixtures {

struct NamedCoupling {
  std::string name;
  mot::DiscreteCoupling coupling;
};

// Forced kernels (3/4, 1/4) and (1/4, 3/4).
inline mot::DiscreteCoupling forced_pair() {
  mot::LiftedMeasure first({{-1.0, 0.5}, {1.0, 0.5}}, {0.5, 0.5});
  return mot::DiscreteCoupling(first, {-2.0, 2.0}, {{0.75, 0.25}, {0.25, 0.75}});
}

// Two irreducible components (-3, -1) and (1, 3) with distinct labels.
inline mot::DiscreteCoupling two_components() {
  mot::LiftedMeasure first({{-2.0, 0.25}, {2.0, 0.75}}, {0.5, 0.5});
  return mot::DiscreteCoupling(first, {-3.0, -1.0, 1.0, 3.0}, {{0.5, 0.5, 0.0, 0.0}, {0.0, 0.0, 0.5, 0.5}});
}

// Two labels at x = 0 with nested binary kernels plus a stationary atom.
inline mot::DiscreteCoupling labelled_split() {
  mot::LiftedMeasure first({{0.0, 0.25}, {0.0, 0.75}, {5.0, 0.5}}, {0.4, 0.4, 0.2});
  return mot::DiscreteCoupling(first, {-2.0, -1.0, 1.0, 2.0, 5.0},
                               {{0.0, 0.5, 0.5, 0.0, 0.0}, {0.5, 0.0, 0.0, 0.5, 0.0}, {0.0, 0.0, 0.0, 0.0, 1.0}});
}

inline std::vector<NamedCoupling> approximation_fixtures() {
  return {{"forced_pair", forced_pair()}, {"two_components", two_components()}, {"labelled_split", labelled_split()}};
}

struct Perturbed {
  mot::LiftedMeasure mu_bar;
  mot::DiscreteMeasure nu;
};

// Moves every x atom and every y atom by scale times a fixed direction in
// [-1, 1] drawn from the seed, then restores convex order by projecting the
// jittered nu onto the measures dominating the new x-marginal.
inline Perturbed jitter(const mot::DiscreteCoupling& pi, double scale, std::uint64_t seed) {
  testsupport::Rng rng(seed);
  const auto& first = pi.first_marginal();
  std::vector<mot::LiftedAtom> atoms;
  for (const auto& a : first.atoms()) atoms.push_back({a.x + scale * rng.uniform(-1.0, 1.0), a.u});
  mot::LiftedMeasure mu_bar(atoms, first.weights());
  const auto& nu = pi.second_marginal();
  std::vector<double> ys;
  for (double y : nu.atoms()) ys.push_back(y + scale * rng.uniform(-1.0, 1.0));
  mot::DiscreteMeasure raw(ys, nu.weights());
  return {mu_bar, mot::wasserstein_projection(mu_bar.projection_x(), raw)};
}

}  // namespace fixtures

namespace fixtures {

struct MarginalPair {
  mot::LiftedMeasure mu;
  mot::DiscreteMeasure nu;
};

// Three-atom pairs moved continuously by a scale parameter s >= 0: atoms are
// dilated and the weights of mu drift, keeping convex order and three atoms
// on each side. s = 0 gives the base pair.
inline std::vector<std::string> hausdorff_family_names() { return {"symmetric", "skewed", "labelled"}; }

inline MarginalPair hausdorff_family(std::size_t which, double s) {
  using mot::DiscreteMeasure;
  using mot::LiftedMeasure;
  switch (which) {
    case 0:
      return {LiftedMeasure({{-1.0 - s / 4, 0.0}, {0.0, 0.0}, {1.0 + s / 4, 0.0}},
                            {1.0 / 3 + s / 6, 1.0 / 3 - s / 3, 1.0 / 3 + s / 6}),
              DiscreteMeasure({-2.0 - s, 0.0, 2.0 + s}, {0.25, 0.5, 0.25})};
    case 1: {
      // Mean zero throughout; the weight drift (2t, -3t, t) keeps the mean.
      // nu is dilated by 1 + s/4, so it moves by s/2 in W1 as in family 0.
      const double d = 1.0 + s / 8, t = s / 20;
      return {LiftedMeasure({{-d, 0.0}, {0.0, 0.0}, {2.0 * d, 0.0}}, {0.4 + 2 * t, 0.4 - 3 * t, 0.2 + t}),
              DiscreteMeasure({-2.0 - s / 2, 1.0 + s / 4, 4.0 + s}, {0.5, 1.0 / 3, 1.0 / 6})};
    }
    default:
      return {LiftedMeasure({{-1.0, 0.2 + s / 8}, {0.0, 0.5}, {1.0, 0.8 - s / 8}}, {0.25, 0.5, 0.25}),
              DiscreteMeasure({-2.0 - s / 2, 0.0, 2.0 + s / 2}, {0.2, 0.6, 0.2})};
  }
}

}  // namespace fixtures
