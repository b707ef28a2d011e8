#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drsae::oracle {

/// A finite world in which every population expectation is an exact sum.
///
/// The joint law factorizes as
///   P(x) P(a|x) P(z|x,a) P(S|x,a) P(T|x,z) P(Y(t)|x,z,a)
/// so sampling is ignorable given (X, A) and treatment is unconfounded
/// given (X, Z). Area ignorability holds exactly when the outcome laws do
/// not vary with a; worlds built with break_area_ignorability() violate it.
struct DiscreteWorld {
  int areas = 1;
  std::vector<double> x_values;
  std::vector<double> x_mass;
  std::vector<double> z_values;
  std::vector<std::vector<double>> area_given_x;                 // [x][a]
  std::vector<std::vector<std::vector<double>>> z_given_x_area;  // [x][a][z]
  std::vector<std::vector<double>> sample_given_x_area;          // [x][a]
  std::vector<std::vector<double>> treat_given_x_z;              // [x][z]
  std::vector<double> y_support;
  /// outcome[t][x][z][a][k] = P(Y(t) = y_support[k] | x, z, a)
  std::vector<std::vector<std::vector<std::vector<std::vector<double>>>>> outcome;

  std::size_t nx() const { return x_values.size(); }
  std::size_t nz() const { return z_values.size(); }

  /// Throws InputError if shapes or probabilities are invalid, or if any
  /// sampling, treatment or area-assignment probability leaves [0.05, 0.95].
  void validate() const;
  bool area_ignorable(double tol = 1e-15) const;
};

/// Two binary covariates, three areas, outcomes on {0, 1, 2, 5}.
DiscreteWorld reference_world();
/// Same world with a single area.
DiscreteWorld single_area_world();
/// Makes outcome laws depend on the area given (x, z).
DiscreteWorld break_area_ignorability(DiscreteWorld w);

DiscreteWorld world_from_json(const std::string& text);
DiscreteWorld load_world(const std::string& path);
std::string world_to_json(const DiscreteWorld& w);

/// Nuisance functions on the (x, z) grid.
struct Nuisances {
  std::vector<std::vector<double>> m1;                // [x][z]
  std::vector<std::vector<double>> m0;                // [x][z]
  std::vector<std::vector<double>> e;                 // [x][z]
  std::vector<std::vector<std::vector<double>>> pi_a;  // [x][z][a]
};

/// E[Y|X,Z,T=t,S=1], P(T=1|X,Z,S=1), P(A=j|X,Z,S=1).
Nuisances true_nuisances(const DiscreteWorld& w);

enum class Perturb { Outcome, Weights, Both };

/// Outcome: m1 + 1.7, m0 - 0.9. Weights: e + 0.15 clipped to [0.05, 0.95]
/// and pi_A tilted toward the area (x + z) mod J then renormalized.
Nuisances perturbed_nuisances(const DiscreteWorld& w, Perturb which);

double p_area(const DiscreteWorld& w, int j);

/// E[Y(1) - Y(0) | A = j] from the conditional-mean formula.
double exact_tau(const DiscreteWorld& w, int j);
/// The same quantity by brute-force summation over every
/// (a, x, z, s, t, y0, y1) tuple of the joint law.
double exact_tau_enumerated(const DiscreteWorld& w, int j);

/// E[phi_j(W, eta)] over the joint law (S = 0 units contribute zero).
double expected_score(const DiscreteWorld& w, int j, const Nuisances& eta);

struct Discrepancy {
  double value = 0.0;
  double tau = 0.0;
  double discrepancy = 0.0;
};

/// Inverse-probability representation pooling all areas.
Discrepancy check_pooled_ipw(const DiscreteWorld& w, int j);

struct AreaSplit {
  double term_in_area = 0.0;
  double term_other_areas = 0.0;
  double tau = 0.0;
  double discrepancy = 0.0;
};
AreaSplit check_area_split(const DiscreteWorld& w, int j);

/// Within-area IPW formula with the area-specific propensity.
Discrepancy check_direct_formula(const DiscreteWorld& w, int j);

Discrepancy check_double_robustness(const DiscreteWorld& w, int j, Perturb which);

struct EfficiencyBound {
  double enumerated = 0.0;      // E[(phi(W, eta0) - tau)^2] by full enumeration
  double stated_form = 0.0;     // two-term expression over the population (X, Z) law
  double sampled_form = 0.0;    // two-term expression over the sampled law, centred by -tau^2
  double outcome_term = 0.0;    // first term of stated_form
  double heterogeneity_term = 0.0;  // second term of stated_form
};

EfficiencyBound efficiency_bound(const DiscreteWorld& w, int j);

/// Draws `reps` samples of n i.i.d. population units and returns the
/// empirical variance of sqrt(n) * tau_HT, with tau_HT the mean of phi
/// at the true nuisances. Replicates run in parallel with per-replicate
/// seeds, so the result does not depend on the thread count.
double monte_carlo_ht_variance(const DiscreteWorld& w, int j, std::size_t n, std::size_t reps, std::uint64_t seed);
double monte_carlo_ht_variance_serial(const DiscreteWorld& w, int j, std::size_t n, std::size_t reps,
                                      std::uint64_t seed);

struct CheckLine {
  std::string name;
  int area = 0;
  double discrepancy = 0.0;
  double tolerance = 0.0;
  bool expect_failure = false;
  bool passed = false;  // outcome matched the expectation
};

/// Runs every check on every area. With `area_dependent`, the identification
/// checks are expected to fail while the within-area formula must hold.
std::vector<CheckLine> run_checks(const DiscreteWorld& w, bool area_dependent);

}  // namespace drsae::oracle
