#pragma once

#include "memory_length.hpp"
#include "pod.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace romforge {

struct ApgReferenceOptions {
    // Every evaluation costs O(r N); refuse grids beyond this many stacked
    // values unless the caller raises the cap explicitly.
    std::int64_t max_values = 200'000;
};

/// Full-space right-hand side of the memory-closed reduced model, evaluated
/// without any precomputed tensors:
///   u = u' + Phi a
///   R = -(u . grad) u + nu lap u
///   Rf = R - Phi (Phi^T R)
///   J[Rf] = -(grad u) Rf - (u . grad) Rf + nu lap Rf
///   da/dt = Phi^T R + T Phi^T J[Rf]
/// This path shares only the finite-difference primitives with the tensorized
/// pipeline, so agreement between the two is a genuine cross-check.
Eigen::VectorXd apg_rhs_fullspace(const CoarseBasis& cb, double nu, const MemoryLength& mem,
                                  const Eigen::VectorXd& a,
                                  const ApgReferenceOptions& options = {});

} // namespace romforge
