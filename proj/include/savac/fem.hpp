#pragma once

#include <functional>
#include <vector>

#include "savac/field.hpp"
#include "savac/linalg.hpp"
#include "savac/mesh.hpp"

namespace savac {

/// Diagonal of the lumped mass matrix: m_i = sum over incident cells of |K|/(dim+1).
/// Represents the nodal-quadrature inner product  int I_h{f g} dx = sum_i m_i f_i g_i.
struct LumpedMass {
  std::vector<double> diag;
};

/// Stiffness matrix K_ij = int grad chi_i . grad chi_j dx.
using StiffnessMatrix = SparseSymOperator;

/// Mesh plus the operators assembled on it; immutable once built.
struct Discretization {
  TorusMesh mesh;
  LumpedMass mass;
  StiffnessMatrix stiffness;
};

LumpedMass assemble_lumped_mass(const TorusMesh& mesh);
StiffnessMatrix assemble_stiffness(const TorusMesh& mesh);
Discretization discretize(int dim, int level);

/// Delta_h zeta = -M_L^{-1} K zeta.
FieldVector discrete_laplacian(const FieldVector& field, const LumpedMass& mass, const StiffnessMatrix& stiff);

double lumped_inner(const FieldVector& f, const FieldVector& g, const LumpedMass& mass);

/// f^T K f, the squared H^1 seminorm of the P1 function f.
double h1_seminorm_sq(const FieldVector& f, const StiffnessMatrix& stiff);

FieldVector nodal_interpolate(const std::function<double(const Point&)>& fn, const TorusMesh& mesh);

}  // namespace savac
