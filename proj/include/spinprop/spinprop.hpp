// spinprop.hpp — umbrella header.

#pragma once

#include "spinprop/field_curve.hpp"
#include "spinprop/holonomy.hpp"
#include "spinprop/io.hpp"
#include "spinprop/kinematics.hpp"
#include "spinprop/numerics.hpp"
#include "spinprop/oracle.hpp"
#include "spinprop/propagators.hpp"
#include "spinprop/su2.hpp"
