#include "pbdcbf/pbd/solver.hpp"

#include <stdexcept>

#include <spdlog/spdlog.h>

namespace pbdcbf::pbd {

namespace {

constexpr double kDegenerateLength = 1e-12;

// Returns false when the pair is degenerate and was skipped.
bool project_distance(Particle& pi, Particle& pj, double rest, double alpha_tilde, double& lambda)
{
    const double wsum = pi.inverse_mass + pj.inverse_mass;
    const Vec3 d = pi.position - pj.position;
    const double len = d.norm();
    if (len < kDegenerateLength)
        return false;
    if (wsum + alpha_tilde == 0.0)
        return true;

    const double C = len - rest;
    const double dlambda = (-C - alpha_tilde * lambda) / (wsum + alpha_tilde);
    lambda += dlambda;
    const Vec3 n = d / len;
    pi.position += pi.inverse_mass * dlambda * n;
    pj.position -= pj.inverse_mass * dlambda * n;
    return true;
}

template <typename Constraint>
SolveReport solve_distances(ClothObject& cloth, const std::vector<Constraint>& constraints,
                            double rest_of(const Constraint&), double compliance, double h,
                            std::span<double> lambdas, const char* kind)
{
    if (lambdas.size() < constraints.size())
        throw std::invalid_argument("one multiplier per constraint required");
    SolveReport report;
    const double alpha_tilde = compliance / (h * h);
    for (std::size_t k = 0; k < constraints.size(); ++k) {
        const auto& c = constraints[k];
        if (!project_distance(cloth.particles[c.i], cloth.particles[c.j], rest_of(c), alpha_tilde, lambdas[k])) {
            ++report.degenerate_edges;
            spdlog::warn("degenerate {} edge {}-{} skipped", kind, c.i, c.j);
        }
    }
    return report;
}

double stretch_rest(const StretchEdge& e) { return e.rest_length; }
double bending_rest(const BendingPair& b) { return b.rest_distance; }

}  // namespace

SolveReport solve_stretch(ClothObject& cloth, double h, std::span<double> lambdas)
{
    return solve_distances(cloth, cloth.stretch_edges, stretch_rest, cloth.stretching_compliance, h,
                           lambdas, "stretch");
}

SolveReport solve_bending(ClothObject& cloth, double h, std::span<double> lambdas)
{
    return solve_distances(cloth, cloth.bending_pairs, bending_rest, cloth.bending_compliance, h,
                           lambdas, "bending");
}

}  // namespace pbdcbf::pbd
