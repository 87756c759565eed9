// thermeas.hpp - umbrella header for the core library

#pragma once

#include "thermeas/errors.hpp"
#include "thermeas/numkernel.hpp"
#include "thermeas/qobjects.hpp"
#include "thermeas/random.hpp"
#include "thermeas/schemes.hpp"
#include "thermeas/thermo.hpp"
#include "thermeas/classify.hpp"
