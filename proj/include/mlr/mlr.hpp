#pragma once

#include "mlr/error.hpp"
#include "mlr/image.hpp"
#include "mlr/rng.hpp"

#include "mlr/linalg/cg.hpp"
#include "mlr/linalg/dense.hpp"
#include "mlr/linalg/sparse.hpp"
#include "mlr/linalg/svd.hpp"

#include "mlr/manifold/graph.hpp"
#include "mlr/manifold/neighborhood.hpp"
#include "mlr/manifold/patch.hpp"
#include "mlr/manifold/rank_map.hpp"

#include "mlr/solvers/common.hpp"
#include "mlr/solvers/inpaint.hpp"
#include "mlr/solvers/linop.hpp"
#include "mlr/solvers/ssl.hpp"

#include "mlr/ct/fanbeam.hpp"
#include "mlr/ct/siddon.hpp"

#include "mlr/io/config.hpp"
#include "mlr/io/dataset.hpp"
#include "mlr/io/harmonic.hpp"
#include "mlr/io/idx.hpp"
#include "mlr/io/mask.hpp"
#include "mlr/io/metrics.hpp"
#include "mlr/io/pgm.hpp"
#include "mlr/io/phantom.hpp"
