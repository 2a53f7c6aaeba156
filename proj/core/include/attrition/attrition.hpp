#pragma once

#include "attrition/diffusion.hpp"
#include "attrition/equilibrium.hpp"
#include "attrition/error.hpp"
#include "attrition/function.hpp"
#include "attrition/oracle.hpp"
#include "attrition/payoffs.hpp"
#include "attrition/simulate.hpp"
#include "attrition/stopping.hpp"
#include "attrition/strategy.hpp"
