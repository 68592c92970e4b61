#pragma once

#include "hjb/problem.hpp"
#include "hjb/stencil.hpp"

namespace hjb {

// Seven-point finite-difference row (three-point in one dimension) at an
// interior node: central second differences on the axes, the cross term on
// the corner pair matching the sign of a12, first-order upwinding for the
// drift.  Exact on quadratics when b = 0; weights become negative exactly
// when the diffusion matrix is not diagonally dominant (the caller detects
// that with check_positive_type).
StencilRow assemble_kd(const ControlProblem& p, const SpaceTimeGrid& g,
                       double t, int ctrl, int node);

}  // namespace hjb
