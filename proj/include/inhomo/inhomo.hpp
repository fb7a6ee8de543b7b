#pragma once

#include "errors.hpp"
#include "interval_set.hpp"
#include "funcspace.hpp"
#include "forms.hpp"
#include "roots.hpp"
#include "lattice.hpp"
#include "parallel.hpp"
#include "planar.hpp"
#include "resonant.hpp"
#include "construct.hpp"
#include "counting.hpp"
#include "ubiquity.hpp"
#include "dimension.hpp"
#include "io.hpp"
#include "config.hpp"
#include "commands.hpp"
