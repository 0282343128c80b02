#include "pbdcbf/pbd/solver.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace pbdcbf::pbd {

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6x12 = Eigen::Matrix<double, 6, 12>;

Mat3 skew(const Vec3& v)
{
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return m;
}

// Applies a small world-frame rotation dtheta to q and renormalizes.
void rotate(Quat& q, const Vec3& dtheta)
{
    const Quat dq(0.0, 0.5 * dtheta.x(), 0.5 * dtheta.y(), 0.5 * dtheta.z());
    q.coeffs() += (dq * q).coeffs();
    q.normalize();
}

bool ensure_unit(Quat& q)
{
    if (std::abs(q.squaredNorm() - 1.0) > 1e-9) {
        q.normalize();
        return true;
    }
    return false;
}

}  // namespace

Quat darboux(const RigidSegment& first, const RigidSegment& second)
{
    return first.orientation.conjugate() * second.orientation;
}

SolveReport solve_sbt(RodObject& rod, double h, std::span<double> lambdas, SweepOrder order)
{
    if (lambdas.size() < 6 * rod.sbt_constraints.size())
        throw std::invalid_argument("six multipliers per rod constraint required");

    SolveReport report;
    const double r = rod.radius;
    const double area_moment = std::numbers::pi * r * r * r * r / 4.0;
    const double polar_moment = 2.0 * area_moment;
    const double k_stretch = rod.material.zero_stretch_stiffness;

    const std::size_t count = rod.sbt_constraints.size();
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t c = order == SweepOrder::forward ? k : count - 1 - k;
        const SbtConstraint& con = rod.sbt_constraints[c];
        RigidSegment& s0 = rod.segments[con.first];
        RigidSegment& s1 = rod.segments[con.second];

        for (Quat* q : {&s0.orientation, &s1.orientation}) {
            if (!std::isfinite(q->norm()) || q->norm() == 0.0)
                throw IntegrationDiverged(q == &s0.orientation ? con.first : con.second,
                                          "non-finite segment orientation");
            if (ensure_unit(*q)) {
                ++report.renormalized_quaternions;
                spdlog::warn("renormalized orientation of segment {}",
                             q == &s0.orientation ? con.first : con.second);
            }
        }

        const double mean_length = 0.5 * (s0.rest_length + s1.rest_length);
        const Vec3 r0 = s0.orientation * Vec3(0.0, 0.0, 0.5 * s0.rest_length);
        const Vec3 r1 = s1.orientation * Vec3(0.0, 0.0, -0.5 * s1.rest_length);

        // Zero-stretch: the adjoining end points coincide.
        const Vec3 c_stretch = (s0.position + r0) - (s1.position + r1);

        // Bend-twist: relative rotation approaches the rest Darboux quaternion,
        // using whichever sign of the rest quaternion is nearer.
        const Quat omega = darboux(s0, s1);
        Quat rest = con.rest_darboux;
        if ((omega.coeffs() - rest.coeffs()).squaredNorm() > (omega.coeffs() + rest.coeffs()).squaredNorm())
            rest.coeffs() = -rest.coeffs();
        const double bend_scale = 2.0 / mean_length;
        const Vec3 c_bend = bend_scale * (omega.vec() - rest.vec());

        Vec6 C;
        C << c_stretch, c_bend;

        // d Im(conj(q0) q1) / d(theta1) = 1/2 (w I - [v]x) R0^T, negated for theta0.
        const Mat3 G = bend_scale * 0.5 * (omega.w() * Mat3::Identity() - skew(omega.vec())) *
                       s0.orientation.toRotationMatrix().transpose();

        // Jacobian blocks for (x0, theta0, x1, theta1); stretch rows use identities.
        const Mat3 skew_r0 = skew(r0);
        const Mat3 skew_r1 = skew(r1);
        const Mat3 inv_i0 = s0.world_inverse_inertia();
        const Mat3 inv_i1 = s1.world_inverse_inertia();

        // M^-1 J^T, block by block (12 x 6).
        Eigen::Matrix<double, 12, 6> MinvJt;
        MinvJt.block<3, 3>(0, 0) = s0.inverse_mass * Mat3::Identity();
        MinvJt.block<3, 3>(0, 3).setZero();
        MinvJt.block<3, 3>(3, 0) = inv_i0 * skew_r0;  // (-[r0]x)^T = [r0]x
        MinvJt.block<3, 3>(3, 3) = -inv_i0 * G.transpose();
        MinvJt.block<3, 3>(6, 0) = -s1.inverse_mass * Mat3::Identity();
        MinvJt.block<3, 3>(6, 3).setZero();
        MinvJt.block<3, 3>(9, 0) = -inv_i1 * skew_r1;
        MinvJt.block<3, 3>(9, 3) = inv_i1 * G.transpose();

        Mat6x12 J;
        J << Mat3::Identity(), -skew_r0, -Mat3::Identity(), skew_r1,
             Mat3::Zero(), -G, Mat3::Zero(), G;
        Mat6 A = J * MinvJt;

        // Compliance: bending/torsion from the section stiffness; stretch acts as a
        // PBD stiffness factor, alpha chosen so that dlambda = -k C / w.
        Vec6 alpha_tilde = Vec6::Zero();
        const double h2 = h * h;
        alpha_tilde(3) = 1.0 / (rod.material.youngs_modulus * area_moment * mean_length) / h2;
        alpha_tilde(4) = alpha_tilde(3);
        alpha_tilde(5) = 1.0 / (rod.material.torsion_modulus * polar_moment * mean_length) / h2;
        const double w_stretch = A.block<3, 3>(0, 0).trace() / 3.0;
        alpha_tilde.head<3>().setConstant((1.0 - k_stretch) / k_stretch * w_stretch);
        A.diagonal() += alpha_tilde;

        Eigen::Map<Vec6> lambda(lambdas.data() + 6 * c);
        const Vec6 rhs = -C - alpha_tilde.cwiseProduct(lambda);

        Vec6 dlambda;
        Eigen::LDLT<Mat6> ldlt(A);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            dlambda = ldlt.solve(rhs);
        } else {
            dlambda = A.completeOrthogonalDecomposition().solve(rhs);
        }
        if (!dlambda.allFinite())
            continue;
        lambda += dlambda;

        const Eigen::Matrix<double, 12, 1> dx = MinvJt * dlambda;
        s0.position += dx.segment<3>(0);
        rotate(s0.orientation, dx.segment<3>(3));
        s1.position += dx.segment<3>(6);
        rotate(s1.orientation, dx.segment<3>(9));
    }
    return report;
}

}  // namespace pbdcbf::pbd
