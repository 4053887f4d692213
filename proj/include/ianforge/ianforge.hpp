#pragma once

// Umbrella header for the whole library.

#include "ianforge/adam.hpp"
#include "ianforge/ball_tree.hpp"
#include "ianforge/cascade.hpp"
#include "ianforge/checkpoint.hpp"
#include "ianforge/config.hpp"
#include "ianforge/dataset.hpp"
#include "ianforge/finite_diff.hpp"
#include "ianforge/graph.hpp"
#include "ianforge/kde.hpp"
#include "ianforge/metrics.hpp"
#include "ianforge/mlp.hpp"
#include "ianforge/parallel.hpp"
#include "ianforge/rng.hpp"
#include "ianforge/tensor.hpp"
#include "ianforge/train.hpp"
