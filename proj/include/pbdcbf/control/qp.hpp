#pragma once

#include <span>
#include <string>
#include <vector>

#include "pbdcbf/control/barrier.hpp"

namespace pbdcbf::control {

enum class QPStatus { optimal, infeasible, degenerate };

std::string to_string(QPStatus status);

struct QPResult {
    Vec3 u = Vec3::Zero();
    QPStatus status = QPStatus::optimal;
    std::vector<std::string> active_labels;
    double solve_time = 0.0;  // s
    double objective = 0.0;
    /// KKT multipliers, one per input row followed by the six speed rows (+x, -x, +y, -y, +z, -z).
    std::vector<double> multipliers;
};

/// The six rows +-u_k >= -u_max.
std::vector<ConstraintRow> speed_rows(double u_max);

/// Exact minimizer of 0.5 |gamma o (u - u_nom)|^2 subject to every row and |u|_inf <= u_max.
/// Infeasible gives u = 0; non-finite input gives status degenerate and u = 0.
QPResult solve_qp(const Vec3& u_nom, const Vec3& gamma, std::span<const ConstraintRow> rows, double u_max);

}  // namespace pbdcbf::control
