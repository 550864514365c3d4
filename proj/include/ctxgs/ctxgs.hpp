#pragma once

#include "ctxgs/binary_io.hpp"
#include "ctxgs/codec.hpp"
#include "ctxgs/coding_plan.hpp"
#include "ctxgs/engine.hpp"
#include "ctxgs/entropy_models.hpp"
#include "ctxgs/error.hpp"
#include "ctxgs/model_io.hpp"
#include "ctxgs/partition.hpp"
#include "ctxgs/ply_io.hpp"
#include "ctxgs/range_coder.hpp"
#include "ctxgs/scene.hpp"
#include "ctxgs/similarity.hpp"
#include "ctxgs/symbol_tables.hpp"
#include "ctxgs/synth.hpp"
#include "ctxgs/trainer.hpp"
