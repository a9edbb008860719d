#pragma once

#include "gmrfrec/cli.hpp"
#include "gmrfrec/common.hpp"
#include "gmrfrec/dense.hpp"
#include "gmrfrec/interactions.hpp"
#include "gmrfrec/metrics.hpp"
#include "gmrfrec/model_io.hpp"
#include "gmrfrec/preprocess.hpp"
#include "gmrfrec/scoring.hpp"
#include "gmrfrec/sparse.hpp"
#include "gmrfrec/split.hpp"
