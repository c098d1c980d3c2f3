#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <stdexcept>

#include "nanonet/topology.hpp"

namespace nanonet {

/// Thrown on non-physical geometry or dimension mismatches.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Relative permittivities of the inter-particle molecular layer and of the
/// substrate environment.
struct Permittivities {
  double molecular = 2.6;
  double substrate = 3.9;

  bool operator==(const Permittivities&) const = default;
};

inline constexpr int kDefaultSeriesTerms = 10;

/// Mutual capacitance (F) of two equal spheres from the image-charge series
///   4 pi eps0 eps r^2/(2r+d) (1 + r^2/((2r+d)^2 - 2r^2) + ...),
/// truncated after n_terms terms. The k-th term of the bracket equals
/// sinh(a) / sinh(2 k a) * (2r+d)/r with cosh(a) = (2r+d)/(2r).
double mutual_capacitance(double radius_nm, double spacing_nm, double eps_rel, int n_terms);

/// Self capacitance (F) of a particle above the substrate,
///   4 pi eps0 eps r (1 - r/(2r+d) + r^2/((2r+d)^2 - 2r^2) + r^3/((2r+d)^3 - 2(2r+d)r^2)).
/// The image series is only available to fourth order; n_terms above 4 is
/// accepted and evaluates the same four terms.
double self_capacitance(double radius_nm, double spacing_nm, double eps_rel, int n_terms);

inline constexpr int kSelfCapacitanceOrder = 4;

/// Per-particle decomposition of a diagonal entry of C.
struct DiagonalParts {
  double junctions = 0.0;  // sum of mutual capacitances to neighbouring particles
  double self = 0.0;
  double electrode = 0.0;  // junction capacitance of an attached electrode, if any
};

/// Maxwell capacitance matrix of the particle network and its cached inverse.
/// Electrodes are fixed-potential terminals: they add a junction term to the
/// diagonal of the particle they touch but have no row of their own.
class CapacitanceModel {
 public:
  CapacitanceModel(Eigen::MatrixXd c, std::vector<DiagonalParts> parts);

  int size() const { return static_cast<int>(c_.rows()); }
  const Eigen::MatrixXd& matrix() const { return c_; }
  const Eigen::MatrixXd& inverse() const { return c_inv_; }
  const std::vector<DiagonalParts>& diagonal_parts() const { return parts_; }

  /// e^2 / C_ii in joules.
  double charging_energy(int np) const;

  /// phi = C^-1 (e q) in volts, q in units of the elementary charge.
  Eigen::VectorXd potentials(std::span<const int> q) const;

  /// max |C C^-1 - I|.
  double inverse_residual() const;

  void write_csv(std::ostream& out) const;

 private:
  Eigen::MatrixXd c_;
  Eigen::MatrixXd c_inv_;
  std::vector<DiagonalParts> parts_;
};

CapacitanceModel assemble_capacitance_matrix(const NetworkTopology& topology, const ElectrodeConfig& electrodes,
                                             const Permittivities& perms, int n_terms = kDefaultSeriesTerms);

/// E = 1/2 q . phi in joules, q in units of e and phi in volts.
double internal_energy(std::span<const int> q, const Eigen::VectorXd& phi);

}  // namespace nanonet
