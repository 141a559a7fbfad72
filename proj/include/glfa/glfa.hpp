#pragma once

#include "glfa/diagnostics.hpp"
#include "glfa/estimator.hpp"
#include "glfa/family.hpp"
#include "glfa/io.hpp"
#include "glfa/likelihood.hpp"
#include "glfa/observations.hpp"
#include "glfa/parameters.hpp"
#include "glfa/projection.hpp"
#include "glfa/selection.hpp"
#include "glfa/simulation.hpp"
