#pragma once

#include <vector>

#include "concord/util.hpp"

namespace concord {

// Maximum-weight bipartite assignment (Hungarian algorithm with potentials).
// weights is rows x cols with nonnegative entries; the result maps each row
// to a column index or -1. Rows may stay unmatched when every available
// column has zero weight; zero-weight pairings are treated as unmatched.
std::vector<int> max_weight_assignment(const Table2& weights);

}  // namespace concord
