#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhlab/clifford.hpp"

namespace dhlab {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured defect
  double tolerance = 0.0;  // pass iff value <= tolerance
  std::string detail;
};

enum class Fault { None, G2Sign };

struct CheckOptions {
  Fault fault = Fault::None;
  unsigned seed = 7;
  int nx = 32;  // torus resolution for the field-level checks
};

// Clifford basis used by the matrix-level checks, with the optional injected fault.
CliffordBasis check_basis(Fault fault);

// Clifford square and anticommutation, skew-adjointness, Dirac summation by
// parts on the torus, coefficient antisymmetry, the curvature identity and the
// divergence identity chain.
std::vector<CheckResult> run_check_suite(const CheckOptions& options = {});

bool all_passed(const std::vector<CheckResult>& results);
std::string check_table(const std::vector<CheckResult>& results);
nlohmann::json check_json(const std::vector<CheckResult>& results);

// Individual checks, exposed for tests and the acceptance harness.
CheckResult check_clifford_square(const CliffordBasis& basis);
CheckResult check_clifford_anticommutation(const CliffordBasis& basis);
CheckResult check_skew_adjointness(const CliffordBasis& basis, unsigned seed, int samples = 200);
CheckResult check_summation_by_parts(unsigned seed, int nx);
CheckResult check_dirac_along_map_symmetry(unsigned seed, int nx);
CheckResult check_antisymmetry(unsigned seed, int nx);
CheckResult check_curvature_identity(unsigned seed, int nx);
CheckResult check_identity_chain(unsigned seed, int nx);

}  // namespace dhlab
