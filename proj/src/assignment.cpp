#include "concord/assignment.hpp"

#include <limits>

namespace concord {

std::vector<int> max_weight_assignment(const Table2& weights) {
    const int n = static_cast<int>(weights.rows());
    const int m_real = static_cast<int>(weights.cols());
    if (n == 0) return {};
    // Pad with one dummy column per row so every row can stay unmatched at
    // zero weight, then solve the min-cost perfect-on-rows assignment on
    // negated weights.
    const int m = m_real + n;
    auto cost = [&](int i, int j) -> double {
        return j < m_real ? -weights.at(i, j) : 0.0;
    };

    const double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] == 0) continue;
        int row = p[j] - 1;
        if (j - 1 < m_real && weights.at(row, j - 1) > 0.0) row_to_col[row] = j - 1;
    }
    return row_to_col;
}

}  // namespace concord
