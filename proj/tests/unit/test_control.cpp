#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "pbdcbf/control/controller.hpp"
#include "support/qp_oracle.hpp"

using namespace pbdcbf;
using namespace pbdcbf::control;

TEST_CASE("alpha is the two-slope piecewise linear map")
{
    CHECK(alpha(0.0, {1.0, 5.0}) == 0.0);
    CHECK(alpha(0.2, {1.0, 5.0}) == doctest::Approx(0.2));
    CHECK(alpha(-0.1, {1.0, 5.0}) == doctest::Approx(-0.5));
    // Strictly increasing, and doubling both slopes doubles every value.
    double prev = -std::numeric_limits<double>::infinity();
    for (double h = -1.0; h <= 1.0; h += 0.01) {
        const double v = alpha(h, {2.0, 10.0});
        CHECK(v > prev);
        prev = v;
        CHECK(alpha(h, {4.0, 20.0}) == doctest::Approx(2.0 * v));
    }
}

TEST_CASE("collision row")
{
    jacobian::JacobianRow J{Vec3(0, 0, 1), true};
    auto row = build_collision_row(J, 0.35, 0.05, {1.0, 1.0});
    REQUIRE(row);
    CHECK(row->a == Vec3(0, 0, 1));
    CHECK(row->b == doctest::Approx(-0.3));
    CHECK(row->kind == RowKind::collision);

    row = build_collision_row(J, 0.05, 0.05, {1.0, 1.0});
    REQUIRE(row);
    CHECK(row->b == 0.0);

    J.valid = false;
    CHECK_FALSE(build_collision_row(J, 0.35, 0.05, {1.0, 1.0}, "collision", false));

    // Scale covariance of the barrier.
    const auto r1 = build_collision_row({Vec3(0.3, 0, 1), true}, 0.02, 0.05, {2.0, 10.0});
    const auto r2 = build_collision_row({Vec3(0.3, 0, 1), true}, 0.02, 0.05, {4.0, 20.0});
    CHECK(r2->b == doctest::Approx(2.0 * r1->b));
}

TEST_CASE("pair rows")
{
    const PairLimits lim{0.2, 2.0};
    const auto s = build_pair_row(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3::Zero(), lim, {1.0, 1.0}, PairKind::stretch);
    CHECK(s.a == Vec3(1, 0, 0));
    CHECK(s.b == doctest::Approx(-1.0));

    const auto edge = build_pair_row(Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0.3, 0.1, 0), lim, {1.0, 1.0}, PairKind::stretch);
    CHECK(edge.b == doctest::Approx(0.3));

    // Receding leader at the stretch limit: follower must chase at 0.2 m/s along a_ij.
    const auto chase =
        build_pair_row(Vec3(0, 0, 0), Vec3(0, 2, 0), Vec3(0, 0.2, 0), lim, {1.0, 1.0}, PairKind::stretch);
    CHECK(chase.b == doctest::Approx(0.2));
    CHECK(chase.a == Vec3(0, 1, 0));

    const auto prox = build_pair_row(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.1, 0, 0), lim, {1.0, 1.0}, PairKind::proximity);
    CHECK(prox.a == Vec3(-1, 0, 0));
    CHECK(prox.b == doctest::Approx(-0.8 - 0.1));

    CHECK_THROWS_AS(build_pair_row(Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3::Zero(), lim, {1, 1}, PairKind::stretch),
                    std::invalid_argument);
}

TEST_CASE("neighbor velocity estimate")
{
    NeighborTrack still;
    for (int k = 0; k < 5; ++k)
        CHECK(estimate_neighbor_velocity(still, Vec3(1, 2, 3), 0.02) == Vec3::Zero());

    const Vec3 v(0.1, -0.2, 0.05);
    NeighborTrack raw;
    raw.smoothing = 0.0;
    CHECK(estimate_neighbor_velocity(raw, Vec3::Zero(), 0.02) == Vec3::Zero());
    for (int k = 1; k <= 5; ++k)
        CHECK((estimate_neighbor_velocity(raw, v * (0.02 * k), 0.02) - v).norm() < 1e-12);

    NeighborTrack smooth;
    estimate_neighbor_velocity(smooth, Vec3::Zero(), 0.02);
    Vec3 est;
    for (int k = 1; k <= 10; ++k)
        est = estimate_neighbor_velocity(smooth, v * (0.02 * k), 0.02);
    CHECK((est - v).norm() <= 0.01 * v.norm());
    CHECK_THROWS(estimate_neighbor_velocity(smooth, Vec3::Zero(), 0.0));
}

TEST_CASE("nominal control")
{
    ControllerState st;
    st.p_r0 = Vec3(0.3, 0, 0);
    CHECK(nominal_control(Vec3(1, 1, 1), Vec3(1.3, 1, 1), st, 0.5) == Vec3::Zero());
    st.p_r0 = Vec3::Zero();
    CHECK(nominal_control(Vec3(1, 0, 0), Vec3(0, 0, 0), st, 0.5) == Vec3(0.5, 0, 0));
}

TEST_CASE("closed loop tracking follows the exponential envelope")
{
    // Reference: RK4 on de/dt = -k_p e with a step 100x finer than the loop.
    const double k_p = 0.5;
    for (double kdt : {0.01, 0.05, 0.1}) {
        const double dt = kdt / k_p;
        const Vec3 e0(0.3, -0.2, 0.1);
        ControllerState st;
        st.p_r0 = Vec3(0.5, 0, 0);
        const Vec3 leader(0.2, 0.1, 1.0);
        Vec3 x = leader + st.p_r0 - e0;

        double e_ref = e0.norm();
        const double hstep = dt / 100.0;
        double worst = 0.0;
        const int ticks = static_cast<int>(std::round(10.0 / k_p / dt));
        for (int k = 1; k <= ticks; ++k) {
            x += dt * nominal_control(leader, x, st, k_p);
            for (int s = 0; s < 100; ++s) {
                const double k1 = -k_p * e_ref;
                const double k2 = -k_p * (e_ref + 0.5 * hstep * k1);
                const double k3 = -k_p * (e_ref + 0.5 * hstep * k2);
                const double k4 = -k_p * (e_ref + hstep * k3);
                e_ref += hstep / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            }
            const double e = (leader + st.p_r0 - x).norm();
            worst = std::max(worst, std::abs(e - e_ref) / e0.norm());
        }
        MESSAGE("k_p dt = " << kdt << ": max envelope deviation " << worst << " of |e(0)|");
        CHECK(worst <= 0.05);
    }
}

TEST_CASE("QP: feasible nominal is returned exactly")
{
    const std::vector<ConstraintRow> rows{{Vec3(0, 0, 1), -0.3, RowKind::collision, "c"}};
    const Vec3 u_nom(0.1, -0.05, 0.02);
    const QPResult r = solve_qp(u_nom, Vec3(1, 2, 3), rows, 0.2);
    CHECK(r.status == QPStatus::optimal);
    CHECK(r.u == u_nom);
    CHECK(r.active_labels.empty());
}

TEST_CASE("QP: single violated row is a half-space projection")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 200; ++i) {
        const Vec3 a(u(rng), u(rng), u(rng));
        const Vec3 u_nom = 0.05 * Vec3(u(rng), u(rng), u(rng));
        const double b = a.dot(u_nom) + 0.02 * (1.0 + u(rng));
        const Vec3 expected = u_nom + a * (b - a.dot(u_nom)) / a.squaredNorm();
        if (expected.lpNorm<Eigen::Infinity>() > 1.0)
            continue;
        const std::vector<ConstraintRow> rows{{a, b, RowKind::collision, "c"}};
        const QPResult r = solve_qp(u_nom, Vec3::Ones(), rows, 1.0);
        REQUIRE(r.status == QPStatus::optimal);
        CHECK((r.u - expected).norm() < 1e-12);
        REQUIRE(r.active_labels.size() == 1);
        CHECK(r.active_labels[0] == "c");
    }
}

TEST_CASE("QP: speed box and infeasibility")
{
    const QPResult clipped = solve_qp(Vec3(0.5, -0.5, 0.1), Vec3::Ones(), {}, 0.2);
    CHECK(clipped.u.isApprox(Vec3(0.2, -0.2, 0.1)));
    CHECK(clipped.active_labels.size() == 2);

    const std::vector<ConstraintRow> clash{{Vec3(1, 0, 0), 0.5, RowKind::collision, "c"}};
    const QPResult r = solve_qp(Vec3::Zero(), Vec3::Ones(), clash, 0.2);
    CHECK(r.status == QPStatus::infeasible);
    CHECK(r.u == Vec3::Zero());

    const std::vector<ConstraintRow> opposed{{Vec3(1, 0, 0), 0.1, RowKind::stretch, "s"},
                                             {Vec3(-1, 0, 0), 0.0, RowKind::proximity, "p"}};
    CHECK(solve_qp(Vec3::Zero(), Vec3::Ones(), opposed, 0.2).status == QPStatus::infeasible);

    const std::vector<ConstraintRow> bad{{Vec3(std::nan(""), 0, 0), 0.0, RowKind::collision, "c"}};
    const QPResult d = solve_qp(Vec3::Zero(), Vec3::Ones(), bad, 0.2);
    CHECK(d.status == QPStatus::degenerate);
    CHECK(d.u == Vec3::Zero());

    // Zero rows: vacuous when b <= 0, infeasible otherwise.
    const std::vector<ConstraintRow> zero_ok{{Vec3::Zero(), -1.0, RowKind::collision, "z"}};
    CHECK(solve_qp(Vec3(0.1, 0, 0), Vec3::Ones(), zero_ok, 0.2).u == Vec3(0.1, 0, 0));
    const std::vector<ConstraintRow> zero_bad{{Vec3::Zero(), 1.0, RowKind::collision, "z"}};
    CHECK(solve_qp(Vec3(0.1, 0, 0), Vec3::Ones(), zero_bad, 0.2).status == QPStatus::infeasible);
}

TEST_CASE("QP: 1000 random instances against grid search and KKT")
{
    std::mt19937_64 rng(22);
    const double u_max = 1.0;
    const double step = u_max / 500.0;
    double worst_kkt = 0.0;
    int active = 0;
    for (int i = 0; i < 1000; ++i) {
        const oracle::QPInstance q = oracle::random_feasible_instance(rng, u_max);
        const QPResult r = solve_qp(q.u_nom, q.gamma, q.rows, q.u_max);
        REQUIRE(r.status == QPStatus::optimal);
        for (const auto& row : q.rows)
            CHECK(row.a.dot(r.u) >= row.b - 1e-8);
        CHECK(r.u.lpNorm<Eigen::Infinity>() <= u_max + 1e-9);
        const double f = oracle::qp_objective(q, r.u);
        CHECK(std::abs(f - r.objective) < 1e-12);
        const auto g = oracle::grid_search(q, step, f + 1e-9);
        CHECK(f <= g.objective + 1e-12);
        worst_kkt = std::max(worst_kkt, oracle::kkt_residuals(q, r).max());
        active += r.active_labels.empty() ? 0 : 1;
    }
    MESSAGE("worst KKT residual " << worst_kkt << ", constrained " << active);
    CHECK(worst_kkt < 1e-8);
    CHECK(active > 500);
}

TEST_CASE("QP: grid optimum lies within two grid steps when the feasible set is thick")
{
    // Rows through a common point make cones too thin for any grid; here every row
    // clears the interior point by at least 0.05 u_max.
    std::mt19937_64 rng(24);
    const double u_max = 1.0;
    const double step = u_max / 500.0;
    int far_grid = 0;
    double worst_ratio = 0.0;
    for (int i = 0; i < 300; ++i) {
        const oracle::QPInstance q = oracle::random_feasible_instance(rng, u_max, 0.05 * u_max);
        const QPResult r = solve_qp(q.u_nom, q.gamma, q.rows, q.u_max);
        REQUIRE(r.status == QPStatus::optimal);
        const double f = oracle::qp_objective(q, r.u);
        // Objective change bound for a move of two grid steps per axis from the optimum.
        const double reach = 2.0 * std::sqrt(3.0) * step;
        const double slack = q.gamma.cwiseProduct(q.gamma).cwiseProduct(r.u - q.u_nom).norm() * reach +
                             0.5 * q.gamma.cwiseAbs2().maxCoeff() * reach * reach;
        const auto g = oracle::grid_search(q, step, f + slack);
        CHECK(f <= g.objective + 1e-12);
        if (g.objective - f > slack)
            ++far_grid;
        else
            worst_ratio = std::max(worst_ratio, (g.objective - f) / slack);
    }
    MESSAGE("instances without a grid point within two steps: " << far_grid << ", worst gap/bound " << worst_ratio);
    CHECK(far_grid == 0);
}

TEST_CASE("QP solve time")
{
    std::mt19937_64 rng(23);
    double total = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const auto q = oracle::random_feasible_instance(rng, 0.2);
        total += solve_qp(q.u_nom, q.gamma, q.rows, q.u_max).solve_time;
    }
    MESSAGE("mean solve time " << total / 2000 * 1e6 << " us");
    CHECK(total / 2000 < 1e-4);
}

TEST_CASE("controller parameters are validated")
{
    ControllerParams p;
    CHECK_NOTHROW(validate(p));
    p.k_p = 0.0;
    p.gamma = Vec3(1, 0, 1);
    p.set_limits("a1", "leader", {0.5, 0.4});
    try {
        validate(p);
        FAIL("expected invalid parameters");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("k_p") != std::string::npos);
        CHECK(msg.find("gamma") != std::string::npos);
        CHECK(msg.find("leader") != std::string::npos);
    }
    ControllerParams q;
    q.set_limits("b", "a", {0.1, 1.0});
    CHECK(q.limits("a", "b"));
    CHECK(q.limits("b", "a")->d_max == 1.0);
    CHECK_FALSE(q.limits("a", "c"));
}

TEST_CASE("control tick: fixed point and constrained dive")
{
    ControllerParams p;
    p.set_limits("a1", "leader", {0.2, 3.0});
    SafetyController c("a1", p);
    const Vec3 leader(0, 0, 1), agent(0, 0.5, 1);
    c.initialize(agent, leader);

    // Distances as if the agent held a particle 0.5 m above flat ground.
    jacobian::ReplicaMeasurements m;
    geometry::DistanceResult d;
    d.distance = 0.5;
    d.infinite = false;
    m.nominal.minimum = d;
    m.nominal.per_obstacle = {d};
    for (int axis = 0; axis < 3; ++axis) {
        geometry::SceneDistances sd;
        geometry::DistanceResult dp = d;
        if (axis == 2)
            dp.distance += 0.1;
        sd.minimum = dp;
        sd.per_obstacle = {dp};
        m.perturbed.push_back(sd);
    }

    Observation obs;
    obs.agent_position = agent;
    obs.leader_position = leader;
    obs.peer_positions = {{"leader", leader}};
    obs.measurements = &m;
    const ControlOutput fixed = c.control_tick(obs);
    CHECK(fixed.qp.status == QPStatus::optimal);
    CHECK(fixed.qp.u.norm() == 0.0);
    CHECK(fixed.diagnostics.rows.size() == 3);

    // Leader dives 0.2 m: nominal asks for -0.1 m/s in z, barrier allows -alpha(0.45).
    obs.leader_position = leader - Vec3(0, 0, 0.2);
    obs.peer_positions = {{"leader", obs.leader_position}};
    const ControlOutput dive = c.control_tick(obs);
    CHECK(dive.qp.status == QPStatus::optimal);
    CHECK(dive.diagnostics.u_nom.z() == doctest::Approx(-0.1));
    CHECK(dive.qp.u.z() >= -p.u_max - 1e-12);
    CHECK(dive.qp.u.z() >= -alpha(0.45, p.alpha_coll) - 1e-12);

    // Near the barrier the collision row becomes the binding constraint.
    m.nominal.minimum.distance = m.nominal.per_obstacle[0].distance = 0.06;
    for (auto& sd : m.perturbed) {
        sd.minimum.distance -= 0.44;
        sd.per_obstacle[0].distance -= 0.44;
    }
    const ControlOutput near = c.control_tick(obs);
    CHECK(near.qp.u.z() == doctest::Approx(-alpha(0.01, p.alpha_coll)));
    CHECK(std::find(near.qp.active_labels.begin(), near.qp.active_labels.end(), "collision[0]") !=
          near.qp.active_labels.end());

    // Bypass ignores the barrier and only clips.
    const ControlOutput raw = c.control_tick(obs, true);
    CHECK(raw.qp.u.z() == doctest::Approx(-0.1));
}
