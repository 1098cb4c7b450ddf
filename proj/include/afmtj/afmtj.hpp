#pragma once

#include "bitline.hpp"
#include "cli.hpp"
#include "config.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "montecarlo.hpp"
#include "peripherals.hpp"
#include "read_path.hpp"
#include "stats.hpp"
#include "vec3.hpp"
