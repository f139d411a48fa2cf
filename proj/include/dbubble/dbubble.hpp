#pragma once

// Umbrella header: the whole library except the CLI front end (which pulls
// in CLI11; include dbubble/cli.hpp explicitly if you want it).

#include "dbubble/common.hpp"
#include "dbubble/csv.hpp"
#include "dbubble/density.hpp"
#include "dbubble/density_spec.hpp"
#include "dbubble/equilibrium.hpp"
#include "dbubble/oracle.hpp"
#include "dbubble/parallel.hpp"
#include "dbubble/phase_map.hpp"
#include "dbubble/quadrature.hpp"
#include "dbubble/root_finding.hpp"
#include "dbubble/tie_curve.hpp"
#include "dbubble/volume_coordinate.hpp"
