#pragma once

#include <cmath>

#include "pgrowth/core/error.hpp"
#include "pgrowth/fem/field.hpp"

namespace pgrowth {

namespace difference_detail {

// number of lattice steps in h along axis s
template <int D>
int lattice_steps(const Mesh<D>& mesh, int s, double h) {
  if (s < 0 || s >= D) throw BadStep("direction index out of range");
  const double k = h / mesh.spacing()(s);
  const double rounded = std::round(k);
  if (!std::isfinite(k) || rounded == 0.0 || std::abs(k - rounded) > 1e-9 * std::max(1.0, std::abs(k)))
    throw BadStep("step " + std::to_string(h) + " is not a nonzero multiple of the mesh spacing along axis " +
                  std::to_string(s));
  return static_cast<int>(rounded);
}

}  // namespace difference_detail

/// v(x + h e_s) - v(x) at nodes whose shift stays in the mesh, 0 elsewhere.
template <int D>
DiscreteField<D> shift_difference(const DiscreteField<D>& v, int s, double h) {
  const Mesh<D>& mesh = v.mesh();
  const int k = difference_detail::lattice_steps(mesh, s, h);
  DiscreteField<D> out(v.mesh_ptr());
  for (int n = 0; n < mesh.node_count(); ++n) {
    auto c = mesh.lattice(n);
    c[s] += k;
    if (c[s] < 0 || c[s] > mesh.cells_per_axis()) continue;
    out.set_node(n, v.at_node(mesh.node_index(c)) - v.at_node(n));
  }
  return out;
}

/// (v(x + h e_s) - v(x)) / h with the same zero extension.
template <int D>
DiscreteField<D> difference_quotient(const DiscreteField<D>& v, int s, double h) {
  DiscreteField<D> out = shift_difference(v, s, h);
  out *= 1.0 / h;
  return out;
}

}  // namespace pgrowth
