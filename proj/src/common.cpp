#include "affsurf/common.hpp"

namespace affsurf {

namespace {
Tolerances g_tol;
}

const Tolerances& tol() { return g_tol; }

void set_tolerances(const Tolerances& t) { g_tol = t; }

}  // namespace affsurf
