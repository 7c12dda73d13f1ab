#pragma once

#include "polydg/errors.hpp"
#include "polydg/geometry.hpp"
#include "polydg/mesh.hpp"
#include "polydg/mesh_generators.hpp"
#include "polydg/quadrature.hpp"
#include "polydg/sparse.hpp"
#include "polydg/solver.hpp"
#include "polydg/parallel.hpp"
#include "polydg/space.hpp"
#include "polydg/forms.hpp"
#include "polydg/stepper.hpp"
#include "polydg/manufactured.hpp"
#include "polydg/convergence.hpp"
#include "polydg/lemmas.hpp"
#include "polydg/config.hpp"
