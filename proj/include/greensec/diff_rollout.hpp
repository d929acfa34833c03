#pragma once

#include "greensec/park.hpp"
#include "greensec/policy.hpp"

namespace greensec {

struct ThetaGradResult {
  double ret = 0.0;
  Vec d_theta;
};

// Episode return together with its gradient w.r.t. the attractiveness
// vector, computed by reverse accumulation through the rollout.
//
// The attack draw is discrete, so the backward pass routes gradients through
// the attack likelihood instead: d attack / d theta is taken as d p / d theta
// (straight-through expectation relaxation).  With relaxed = true the forward
// pass also substitutes p for the sampled attack, giving a deterministic
// differentiable surrogate of the expected return; finite differences of that
// surrogate validate the backward pass.
//
// Gradients flow through every path: the likelihood, the wildlife recursion,
// past-effort deterrence/displacement at later steps, and (for
// theta-conditioned policies) the policy input.
ThetaGradResult rollout_theta_grad(const ParkInstance& park, const Vec& theta,
                                   const Policy& policy, std::uint64_t attack_seed,
                                   std::uint64_t policy_seed, bool relaxed);

}  // namespace greensec
