#include "hjb/scheme_kd.hpp"

#include <cmath>

#include "hjb/errors.hpp"

namespace hjb {

StencilRow assemble_kd(const ControlProblem& p, const SpaceTimeGrid& g,
                       double t, int ctrl, int node) {
  if (!g.is_interior(node))
    throw ConfigError("assemble_kd: rows exist only at interior nodes");

  StencilRow row;
  row.center = node;
  row.control = ctrl;
  row.time = t;

  const Point x = g.point(node);
  double a[4], b[2] = {0, 0};
  p.diffusion(ctrl, t, x, a);
  p.drift(ctrl, t, x, b);

  const double h1 = g.dx[0];
  auto add = [&](int dx_ix, int dx_iy, double w) {
    if (w == 0) return;
    const auto mi = g.multi_index(node);
    row.node_terms.emplace_back(g.node_of(mi[0] + dx_ix, mi[1] + dx_iy), w);
  };

  if (g.dim == 1) {
    add(+1, 0, a[0] / (h1 * h1));
    add(-1, 0, a[0] / (h1 * h1));
    row.center_weight += 2 * a[0] / (h1 * h1);
  } else {
    const double h2 = g.dx[1];
    const double cross = std::abs(a[1]) / (h1 * h2);
    // Axis weights lose the cross-term mass; they go negative when the
    // matrix is not diagonally dominant, which the positivity check flags.
    add(+1, 0, a[0] / (h1 * h1) - cross);
    add(-1, 0, a[0] / (h1 * h1) - cross);
    add(0, +1, a[3] / (h2 * h2) - cross);
    add(0, -1, a[3] / (h2 * h2) - cross);
    if (a[1] > 0) {
      add(+1, +1, cross);
      add(-1, -1, cross);
    } else if (a[1] < 0) {
      add(+1, -1, cross);
      add(-1, +1, cross);
    }
    row.center_weight +=
        2 * a[0] / (h1 * h1) + 2 * a[3] / (h2 * h2) - 2 * cross;
  }

  // Upwind drift: difference in the direction the drift points to.
  for (int k = 0; k < g.dim; ++k) {
    if (b[k] == 0) continue;
    const double h = g.dx[k];
    const double w = std::abs(b[k]) / h;
    const int s = b[k] > 0 ? +1 : -1;
    add(k == 0 ? s : 0, k == 1 ? s : 0, w);
    row.center_weight += w;
  }

  row.discount = p.discount(ctrl, t, x);
  row.center_weight -= row.discount;
  row.constant = p.running_cost(ctrl, t, x);
  merge_node_terms(row);
  return row;
}

}  // namespace hjb
