#pragma once

#include <variant>

#include "qht/minimax.hpp"
#include "qht/state.hpp"

namespace qht {

inline DensityMatrix build(const StateSpec& spec) {
  if (const auto* h = std::get_if<HardestState>(&spec)) {
    check_alpha(h->alpha, "hardest state");
    if (h->dim == 0)
      throw InvalidSpec("hardest state: dim must be positive");
    const auto scan = minimax::positivity_scan(h->alpha, h->a, h->beta, h->c, h->dim);
    if (!scan.ok)
      throw PositivityViolation("hardest state: negative diagonal entry at k = " +
                                    std::to_string(*scan.first_violation_k),
                                *scan.first_violation_k);
    return DensityMatrix::from_diagonal(scan.diagonal);
  }
  return build_elementary(spec);
}

} // namespace qht
