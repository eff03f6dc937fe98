#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "causex/blackbox.hpp"
#include "causex/oracle.hpp"
#include "causex/recourse.hpp"

namespace causex::fixtures {

/// Confounded monotone model: Z -> X, Z -> O, X -> O with fair coins
/// U_Z, U_X, U_O; Z := U_Z, X := Z and U_X, O := X or (Z and U_O).
Scm f1();
/// F1 without the Z -> O edge: O := X or U_O.
Scm f1_unconfounded();

struct RandomScmOptions {
  std::size_t endogenous = 4;      // including the outcome "O"
  bool monotone = false;           // threshold mechanisms with non-negative weights
  bool ternary_first = false;      // V0 takes three values
  bool unreachable_extra = false;  // adds a sink "W" with no path to O
  double edge_probability = 0.5;
};

/// Random Markovian model over V0..V{n-2} and the outcome O (last in
/// topological order). Each Vi has its own exogenous parent; O is a
/// deterministic, non-constant function of its parents.
struct RandomScm {
  Scm scm;
  std::vector<std::string> inputs;  // parents of O
};
RandomScm random_scm(std::uint64_t seed, const RandomScmOptions& opts = {});

/// Six-variable credit model (Age, Sex, Status, Saving, Housing -> Credit).
/// The decision rule rewards age for owners and penalises it for renters;
/// `renter_share` sets Pr(Housing = rent) and thereby the amount of
/// monotonicity violation.
struct GermanSyn {
  Scm scm;
  std::shared_ptr<BlackBox> bb;
  OutcomeSpec outcome;
};
GermanSyn german_syn(std::uint64_t seed, double renter_share = 0.2);

struct RecourseInstanceOptions {
  std::size_t max_attributes = 6;
  std::size_t max_domain = 5;
  double alpha = 0.9;
  /// Equal-mass quantile levels for U_O; 0 makes Pr(O | A, C) exactly logistic.
  std::size_t noise_levels = 0;
};

/// Actionable roots A1..Am, a binary context C and O := [score(A, C) + U_O > 0]
/// with U_O a discretised standard logistic. The individual has a negative
/// outcome with positive probability.
struct RecourseInstance {
  Scm scm;
  OutcomeSpec outcome;
  std::vector<int> individual;
  RecourseConfig config;
};
RecourseInstance recourse_instance(std::uint64_t seed, const RecourseInstanceOptions& opts = {});

/// Logit-linear instance with `attributes` ternary actionable variables, a
/// directly specified model and a small sampled dataset for the estimator.
struct LinearInstance {
  std::shared_ptr<const Dataset> data;
  RecourseProblem problem;
  LogitModel model;
};
LinearInstance linear_instance(std::uint64_t seed, std::size_t attributes, double alpha = 0.9);

}  // namespace causex::fixtures
