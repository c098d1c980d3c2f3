#include "nanonet/electrostatics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <ostream>

#include "nanonet/constants.hpp"

namespace nanonet {

using constants::kNano;
using constants::kPi;
using constants::kVacuumPermittivity;

namespace {

void check_geometry(double radius_nm, double spacing_nm, double eps_rel, int n_terms) {
  if (!(radius_nm > 0.0) || !(spacing_nm > 0.0)) {
    throw DomainError(fmt::format("non-positive geometry r={} nm d={} nm", radius_nm, spacing_nm));
  }
  if (!(eps_rel >= 1.0)) throw DomainError(fmt::format("relative permittivity {} below 1", eps_rel));
  if (n_terms < 1) throw DomainError("series needs at least one term");
}

}  // namespace

double mutual_capacitance(double radius_nm, double spacing_nm, double eps_rel, int n_terms) {
  check_geometry(radius_nm, spacing_nm, eps_rel, n_terms);
  const double r = radius_nm * kNano;
  const double dist = (2.0 * radius_nm + spacing_nm) * kNano;
  const double alpha = std::acosh(dist / (2.0 * r));
  const double sh = std::sinh(alpha);
  double sum = 0.0;
  for (int k = 1; k <= n_terms; ++k) {
    const double denom = std::sinh(2.0 * k * alpha);
    if (!(denom > 0.0)) throw DomainError(fmt::format("series term {} has non-positive denominator", k));
    if (std::isinf(denom)) break;  // remaining terms underflow
    sum += sh / denom;
  }
  return 4.0 * kPi * kVacuumPermittivity * eps_rel * r * sum;
}

double self_capacitance(double radius_nm, double spacing_nm, double eps_rel, int n_terms) {
  check_geometry(radius_nm, spacing_nm, eps_rel, n_terms);
  const double r = radius_nm;
  const double dist = 2.0 * radius_nm + spacing_nm;
  const double terms[kSelfCapacitanceOrder] = {
      1.0,
      -r / dist,
      r * r / (dist * dist - 2.0 * r * r),
      r * r * r / (dist * dist * dist - 2.0 * dist * r * r),
  };
  double sum = 0.0;
  for (int k = 0; k < std::min(n_terms, kSelfCapacitanceOrder); ++k) sum += terms[k];
  return 4.0 * kPi * kVacuumPermittivity * eps_rel * radius_nm * kNano * sum;
}

CapacitanceModel::CapacitanceModel(Eigen::MatrixXd c, std::vector<DiagonalParts> parts)
    : c_(std::move(c)), parts_(std::move(parts)) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(c_);
  c_inv_ = lu.inverse();
  if (!c_inv_.allFinite()) throw std::logic_error("capacitance matrix is singular");
  // Symmetrise away the LU round-off so C^-1 stays exactly symmetric.
  c_inv_ = 0.5 * (c_inv_ + c_inv_.transpose()).eval();
}

double CapacitanceModel::charging_energy(int np) const {
  const double e = constants::kElementaryCharge;
  return e * e / c_(np, np);
}

Eigen::VectorXd CapacitanceModel::potentials(std::span<const int> q) const {
  if (static_cast<int>(q.size()) != size()) {
    throw DomainError(fmt::format("charge vector has {} entries, network has {}", q.size(), size()));
  }
  Eigen::VectorXd charge(size());
  for (int i = 0; i < size(); ++i) charge[i] = q[i] * constants::kElementaryCharge;
  return c_inv_ * charge;
}

double CapacitanceModel::inverse_residual() const {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(size(), size());
  return (c_ * c_inv_ - id).cwiseAbs().maxCoeff();
}

void CapacitanceModel::write_csv(std::ostream& out) const {
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < size(); ++j) out << fmt::format("{}{:.9e}", j ? "," : "", c_(i, j));
    out << '\n';
  }
}

CapacitanceModel assemble_capacitance_matrix(const NetworkTopology& topology, const ElectrodeConfig& electrodes,
                                             const Permittivities& perms, int n_terms) {
  const auto& np = topology.particle();
  const double c_mutual = mutual_capacitance(np.radius_nm, np.spacing_nm, perms.molecular, n_terms);
  const double c_self = self_capacitance(np.radius_nm, np.spacing_nm, perms.substrate, n_terms);

  const int n = topology.size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  std::vector<DiagonalParts> parts(static_cast<std::size_t>(n));
  for (auto [i, j] : topology.adjacency()) {
    c(i, j) = -c_mutual;
    c(j, i) = -c_mutual;
    parts[i].junctions += c_mutual;
    parts[j].junctions += c_mutual;
  }
  for (int i = 0; i < n; ++i) parts[i].self = c_self;
  for (const auto& e : electrodes.electrodes()) parts[e.np].electrode += c_mutual;
  for (int i = 0; i < n; ++i) c(i, i) = parts[i].junctions + parts[i].self + parts[i].electrode;
  return CapacitanceModel(std::move(c), std::move(parts));
}

double internal_energy(std::span<const int> q, const Eigen::VectorXd& phi) {
  if (static_cast<Eigen::Index>(q.size()) != phi.size()) {
    throw DomainError("charge and potential vectors differ in length");
  }
  double e = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) e += q[i] * phi[static_cast<Eigen::Index>(i)];
  return 0.5 * constants::kElementaryCharge * e;
}

}  // namespace nanonet
