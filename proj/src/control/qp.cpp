#include "pbdcbf/control/qp.hpp"

#include <chrono>
#include <cmath>

namespace pbdcbf::control {

namespace {

constexpr double kIndependence = 1e-10;
constexpr double kFeasibility = 1e-11;  // on unit-normalized rows
constexpr double kDual = 1e-12;

struct NormalizedRow {
    Vec3 a = Vec3::Zero();  // unit normal in the scaled variable z = gamma o u
    double b = 0.0;
    double scale = 0.0;     // |gamma^-1 o a|; 0 for a vacuous zero row
};

}  // namespace

std::string to_string(QPStatus status)
{
    switch (status) {
    case QPStatus::optimal: return "optimal";
    case QPStatus::infeasible: return "infeasible";
    case QPStatus::degenerate: return "degenerate";
    }
    return "degenerate";
}

std::vector<ConstraintRow> speed_rows(double u_max)
{
    static const char* names[6] = {"speed+x", "speed-x", "speed+y", "speed-y", "speed+z", "speed-z"};
    std::vector<ConstraintRow> rows;
    for (int k = 0; k < 6; ++k) {
        Vec3 a = Vec3::Zero();
        // +u_k >= -u_max bounds u_k from below, -u_k >= -u_max from above.
        a[k / 2] = k % 2 == 0 ? 1.0 : -1.0;
        rows.push_back({a, -u_max, RowKind::speed, names[k]});
    }
    return rows;
}

QPResult solve_qp(const Vec3& u_nom, const Vec3& gamma, std::span<const ConstraintRow> rows, double u_max)
{
    const auto t0 = std::chrono::steady_clock::now();
    QPResult out;
    const auto finish = [&]() -> QPResult {
        out.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    };

    std::vector<ConstraintRow> all(rows.begin(), rows.end());
    for (auto& r : speed_rows(u_max))
        all.push_back(std::move(r));
    out.multipliers.assign(all.size(), 0.0);

    bool finite = u_nom.allFinite() && gamma.allFinite() && std::isfinite(u_max) && u_max > 0.0 &&
                  (gamma.array() > 0.0).all();
    for (const auto& r : all)
        finite = finite && r.a.allFinite() && std::isfinite(r.b);
    if (!finite) {
        out.status = QPStatus::degenerate;
        out.u.setZero();
        return finish();
    }

    const Vec3 z_nom = gamma.cwiseProduct(u_nom);
    std::vector<NormalizedRow> nr(all.size());
    std::vector<std::size_t> live;
    for (std::size_t k = 0; k < all.size(); ++k) {
        const Vec3 a = all[k].a.cwiseQuotient(gamma);
        const double n = a.norm();
        if (n == 0.0) {
            if (all[k].b > 0.0) {
                out.status = QPStatus::infeasible;
                return finish();
            }
            continue;
        }
        nr[k] = {a / n, all[k].b / n, n};
        live.push_back(k);
    }

    const auto min_slack = [&](const Vec3& z) {
        double s = std::numeric_limits<double>::infinity();
        for (std::size_t k : live)
            s = std::min(s, nr[k].a.dot(z) - nr[k].b);
        return s;
    };

    if (live.empty() || min_slack(z_nom) >= 0.0) {
        out.u = u_nom;
        out.objective = 0.0;
        return finish();
    }

    double best_obj = std::numeric_limits<double>::infinity();
    Vec3 best_z = Vec3::Zero();
    std::array<std::size_t, 3> best_set{};
    std::array<double, 3> best_mu{};
    std::size_t best_size = 0;

    const auto consider = [&](const std::size_t* idx, std::size_t m) {
        Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
        Eigen::Vector3d b = Eigen::Vector3d::Zero();
        for (std::size_t r = 0; r < m; ++r) {
            A.row(static_cast<Eigen::Index>(r)) = nr[idx[r]].a.transpose();
            b[static_cast<Eigen::Index>(r)] = nr[idx[r]].b;
        }
        Vec3 mu = Vec3::Zero();
        if (m == 1) {
            mu[0] = b[0] - A.row(0).dot(z_nom);
        } else if (m == 2) {
            const double c = A.row(0).dot(A.row(1));
            const double det = 1.0 - c * c;
            if (det < kIndependence)
                return;
            const double r0 = b[0] - A.row(0).dot(z_nom);
            const double r1 = b[1] - A.row(1).dot(z_nom);
            mu[0] = (r0 - c * r1) / det;
            mu[1] = (r1 - c * r0) / det;
        } else {
            const double det = A.determinant();
            if (std::abs(det) < kIndependence)
                return;
            // Three independent rows fix z; multipliers from A^T mu = z - z_nom.
            const Vec3 z = A.partialPivLu().solve(b);
            mu = A.transpose().partialPivLu().solve(z - z_nom);
        }
        for (std::size_t r = 0; r < m; ++r)
            if (mu[static_cast<Eigen::Index>(r)] < -kDual)
                return;
        Vec3 z = z_nom;
        for (std::size_t r = 0; r < m; ++r)
            z += mu[static_cast<Eigen::Index>(r)] * nr[idx[r]].a;
        if (min_slack(z) < -kFeasibility)
            return;
        const double obj = 0.5 * (z - z_nom).squaredNorm();
        if (obj < best_obj) {
            best_obj = obj;
            best_z = z;
            best_size = m;
            for (std::size_t r = 0; r < m; ++r) {
                best_set[r] = idx[r];
                best_mu[r] = std::max(0.0, mu[static_cast<Eigen::Index>(r)]);
            }
        }
    };

    const std::size_t L = live.size();
    std::size_t idx[3];
    for (std::size_t i = 0; i < L; ++i) {
        idx[0] = live[i];
        consider(idx, 1);
        for (std::size_t j = i + 1; j < L; ++j) {
            idx[1] = live[j];
            consider(idx, 2);
            for (std::size_t k = j + 1; k < L; ++k) {
                idx[2] = live[k];
                consider(idx, 3);
            }
        }
    }

    if (best_size == 0) {
        out.status = QPStatus::infeasible;
        out.u.setZero();
        return finish();
    }

    out.u = best_z.cwiseQuotient(gamma);
    out.objective = best_obj;
    for (std::size_t r = 0; r < best_size; ++r) {
        const std::size_t k = best_set[r];
        // Back to the unscaled rows: gamma^2 (u - u_nom) = sum lambda_k a_k.
        out.multipliers[k] = best_mu[r] / nr[k].scale;
        if (best_mu[r] > kDual)
            out.active_labels.push_back(all[k].label);
    }
    return finish();
}

}  // namespace pbdcbf::control
