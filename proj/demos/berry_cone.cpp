// Sweep the cone opening angle and print the geometric phase picked up over
// one closed loop of the field direction, next to the solid-angle value.

#include <cstdio>

#include "spinprop/spinprop.hpp"

int main() {
    using namespace spinprop;
    std::printf("theta0,gamma_loop,minus_solid_angle\n");
    for (int k = 1; k <= 17; ++k) {
        const double theta0 = kPi * k / 18.0 * 0.999;
        Kinematics kin(FieldCurve::cone(theta0, 1.0, 1.0, kTwoPi));
        const double gamma = kin.phases(kTwoPi).gamma;
        std::printf("%.10f,%.12f,%.12f\n", theta0, gamma, -kTwoPi * (1.0 - std::cos(theta0)));
    }
    return 0;
}
