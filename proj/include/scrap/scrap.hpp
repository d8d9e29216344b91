#pragma once

#define SCRAP_VERSION "1.0.0"

#include "scrap/errors.hpp"
#include "scrap/vec3.hpp"
#include "scrap/core_model.hpp"
#include "scrap/integrator.hpp"
#include "scrap/control_field.hpp"
#include "scrap/dynamics.hpp"
#include "scrap/parallel.hpp"
#include "scrap/landscape.hpp"
#include "scrap/perturbation.hpp"
#include "scrap/pmp.hpp"
#include "scrap/inhomogeneity.hpp"
#include "scrap/geophase.hpp"
