#pragma once

#include "elliptest/engine.hpp"
#include "elliptest/error.hpp"
#include "elliptest/experiments.hpp"
#include "elliptest/io.hpp"
#include "elliptest/kolmogorov.hpp"
#include "elliptest/matrix.hpp"
#include "elliptest/null_model.hpp"
#include "elliptest/rng.hpp"
#include "elliptest/sample.hpp"
#include "elliptest/samplers.hpp"
#include "elliptest/special.hpp"
#include "elliptest/statistics.hpp"
#include "elliptest/tyler.hpp"
