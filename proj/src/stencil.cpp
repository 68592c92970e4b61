#include "hjb/stencil.hpp"

#include <algorithm>

namespace hjb {

void merge_node_terms(StencilRow& row) {
  auto& terms = row.node_terms;
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (out > 0 && terms[out - 1].first == terms[i].first)
      terms[out - 1].second += terms[i].second;
    else
      terms[out++] = terms[i];
  }
  terms.resize(out);
}

PositiveTypeReport check_positive_type(const std::vector<StencilRow>& rows,
                                       double dt, double theta) {
  PositiveTypeReport rep;
  if (rows.empty()) return rep;
  rep.min_off_weight = 1e300;
  int slack_node = -1, slack_control = 0;
  double slack = 1e300;
  for (const auto& row : rows) {
    double row_min = 0;
    bool any = false;
    for (const auto& [node, w] : row.node_terms) {
      (void)node;
      row_min = any ? std::min(row_min, w) : w;
      any = true;
    }
    for (const auto& [pt, w] : row.boundary_terms) {
      (void)pt;
      row_min = any ? std::min(row_min, w) : w;
      any = true;
    }
    const double expl =
        1.0 - (1.0 - theta) * dt *
                  (row.center_weight + std::max(row.discount, 0.0));
    if (std::min(row_min, expl) < slack) {
      slack = std::min(row_min, expl);
      slack_node = row.center;
      slack_control = row.control;
    }
    if ((row_min < 0 || expl < 0) && rep.pass) {
      rep.pass = false;  // first violating row wins the report
      rep.worst_node = row.center;
      rep.worst_control = row.control;
    }
    rep.min_off_weight = std::min(rep.min_off_weight, row_min);
    rep.min_explicit_coeff = std::min(rep.min_explicit_coeff, expl);
  }
  if (rep.pass) {
    rep.worst_node = slack_node;
    rep.worst_control = slack_control;
  }
  return rep;
}

}  // namespace hjb
