#pragma once

#include "align.hpp"
#include "analytic.hpp"
#include "automorphism.hpp"
#include "detection.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "graph_io.hpp"
#include "likelihood.hpp"
#include "log_weight.hpp"
#include "matching_sum.hpp"
#include "parallel.hpp"
#include "psi.hpp"
#include "rng.hpp"
#include "tree.hpp"
#include "tree_io.hpp"
#include "tree_sampling.hpp"
