#pragma once

#include <vector>

namespace dreamhop {

// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached per node count; the returned reference stays valid for the
// lifetime of the program.
const QuadratureRule& gauss_legendre(int n);

struct QuadratureOptions {
  int initial_nodes = 256;
  int max_nodes = 1 << 15;
  double rel_tol = 1e-9;
  // When false, `initial_nodes` is used as is.
  bool adaptive = true;
};

}  // namespace dreamhop
