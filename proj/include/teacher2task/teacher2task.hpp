#ifndef TEACHER2TASK_TEACHER2TASK_HPP
#define TEACHER2TASK_TEACHER2TASK_HPP

// Umbrella header: the whole library.

#include "teacher2task/baselines.hpp"
#include "teacher2task/core.hpp"
#include "teacher2task/eval.hpp"
#include "teacher2task/experiment.hpp"
#include "teacher2task/model.hpp"
#include "teacher2task/rng.hpp"
#include "teacher2task/selftrain.hpp"
#include "teacher2task/teacher.hpp"
#include "teacher2task/train.hpp"
#include "teacher2task/transform.hpp"
#include "teacher2task/world.hpp"

#endif
