#pragma once

#include "cdgan/checkpoint.hpp"
#include "cdgan/config.hpp"
#include "cdgan/data.hpp"
#include "cdgan/evaluation.hpp"
#include "cdgan/log.hpp"
#include "cdgan/losses.hpp"
#include "cdgan/model.hpp"
#include "cdgan/ops.hpp"
#include "cdgan/optimizer.hpp"
#include "cdgan/rng.hpp"
#include "cdgan/serialize.hpp"
#include "cdgan/tape.hpp"
#include "cdgan/tensor.hpp"
#include "cdgan/train_config.hpp"
#include "cdgan/trainer.hpp"
