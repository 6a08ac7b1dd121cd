#pragma once

// Single-edge conductance distribution: validation of the model assumptions,
// sampling, and the moment functionals entering every closed-form speed
// expression. Immutable after construction; safe to share across replicas.

#include <vector>

#include "dynwalk/rng.hpp"

namespace dynwalk {

enum class MomentFunctional {
  inv1,            // 1/(mu+w)
  ratio,           // w/(mu+w)
  inv2,            // 1/(mu+w)^2
  ratio2,          // w/(mu+w)^2
  centered_ratio2, // w(w-m)/(mu+w)^2
  centered_inv2,   // (w-m)/(mu+w)^2
  mean,            // w
  abslog,          // |log w|; requires q({0}) = 0
};

struct LawCapabilities {
  bool bounded_support = false;
  bool uniformly_elliptic = false;
  bool zero_free = false;
  bool log_moment_finite = false;
};

class ConductanceLaw {
 public:
  struct Atom {
    double value;
    double prob;
  };

  // Finite discrete law on the given atoms; kappa is the declared support
  // bound and must dominate every atom value.
  static ConductanceLaw finite_discrete(std::vector<Atom> atoms, double kappa);
  // Uniform on [lo, hi], 0 <= lo < hi <= kappa.
  static ConductanceLaw uniform_interval(double lo, double hi, double kappa);

  // Convenience constructors for the laws used throughout.
  static ConductanceLaw point_mass(double value, double kappa);
  static ConductanceLaw two_point(double a, double b, double prob_a, double kappa);

  double kappa() const { return kappa_; }
  bool is_discrete() const { return discrete_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  LawCapabilities validate() const { return caps_; }

  double sample(RngStream& rng) const;
  double moment(MomentFunctional f, double mu) const;

 private:
  ConductanceLaw() = default;
  void check_and_finish();

  bool discrete_ = true;
  std::vector<Atom> atoms_;
  double lo_ = 0.0, hi_ = 0.0;
  double kappa_ = 1.0;
  LawCapabilities caps_;
};

}  // namespace dynwalk
