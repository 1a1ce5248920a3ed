#pragma once

#include "vop/basis.hpp"
#include "vop/csv.hpp"
#include "vop/dense.hpp"
#include "vop/expr.hpp"
#include "vop/greens.hpp"
#include "vop/problem.hpp"
#include "vop/quadrature.hpp"
#include "vop/system.hpp"
#include "vop/variation.hpp"
#include "vop/verify.hpp"
