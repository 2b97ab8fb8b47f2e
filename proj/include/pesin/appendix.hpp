#pragma once

// Linear-algebra facts behind the volume comparisons: the restricted
// determinant perturbation bound, the aperture bound for graphs of linear
// maps and the volume of graphs with bounded derivative.

#include "pesin/graph_transform.hpp"
#include "pesin/stable_manifold.hpp"

namespace pesin {

struct BoundCheck {
  double lhs = 0;
  double rhs = 0;
  double margin = 0;  // rhs - lhs
};

/// Explicit constant in ||det A|_{E1}| - |det B|_{E2}|| <= C7 a^p (|A - B| + Gamma(E1, E2)).
/// Column-wise telescoping gives p a^{p-1} |X - Y| for the volumes of the
/// images of aligned principal bases, and |Q1 - Q2| <= sqrt(2) Gamma.
double restricted_det_constant(int p);

/// Requires a >= max(1, |A|, |B|) and dim E1 = dim E2.
BoundCheck restricted_det_bound_check(const Mat& A, const Mat& B, const Mat& E1, const Mat& E2, double a);

/// Basis [I; A] of graph(A) in H1 x H2.
Mat graph_basis(const Mat& A);

/// Gamma(graph A, graph B) <= 2 (|A| + |B|).
BoundCheck graph_aperture_bound_check(const Mat& A, const Mat& B);

struct VolumeCheck {
  double domain_volume = 0;
  double graph_volume = 0;
  double upper_bound = 0;         // (1 + a^2)^{p/2} vol
  double lower_margin = 0;        // graph_volume - vol
  double upper_margin = 0;        // upper_bound - graph_volume
  double node_derivative_sup = 0; // sup |D psi| over the quadrature nodes
  bool precondition_ok = true;    // node_derivative_sup <= a_m
};

/// Composite Gauss-Legendre (order 16 per cell) over the cube domain of the
/// grid function, integrand sqrt(det(I + D^T D)).
VolumeCheck graph_volume_bound_check(const GridFunction& psi, double a_m);
VolumeCheck graph_volume_bound_check(const GraphChart& chart, double a_m);
VolumeCheck graph_volume_bound_check(const StableChart& chart, double a_m);

}  // namespace pesin
