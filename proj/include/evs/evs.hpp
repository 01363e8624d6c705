#pragma once

#include "evs/baselines.hpp"
#include "evs/cost_model.hpp"
#include "evs/diff_field.hpp"
#include "evs/error.hpp"
#include "evs/geometry.hpp"
#include "evs/image_sequence.hpp"
#include "evs/pruner.hpp"
#include "evs/rate_sampler.hpp"
#include "evs/selector_embedding.hpp"
#include "evs/selector_rgb.hpp"
#include "evs/tensor.hpp"
#include "evs/tensor_io.hpp"
