// Design an exactly solvable magnitude over a wobbling planar direction,
// then compare the closed-form propagator against the brute-force integrator
// while the integrator's step count grows.

#include <cstdio>

#include "spinprop/spinprop.hpp"

int main() {
    using namespace spinprop;
    const SpinRep rep = build_generators(1.0);

    auto direction = FieldCurve::planar_wobble(1.0, 0.3, 1.0, 1.0, kTwoPi);
    auto designed = design_field(direction, 1.0);
    Kinematics kin(designed);

    const auto sr = solvability_check(kin);
    std::printf("# classification=%s nu0=%.12f residual=%.3e\n",
                solvability_name(sr.classification), sr.nu0, sr.residual);

    const Propagator exact = exact_u_lemma2(rep, kin, sr.nu0, kTwoPi);
    std::printf("steps,max_diff_vs_exact\n");
    for (long steps : {100L, 400L, 1600L, 6400L, 25600L}) {
        oracle::IntegrationConfig cfg;
        cfg.steps = steps;
        const Propagator brute = oracle::integrate(dipole_sampler(rep, designed), kTwoPi, cfg);
        std::printf("%ld,%.3e\n", steps, max_norm(exact.U - brute.U));
    }
    return 0;
}
