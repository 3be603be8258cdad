#pragma once

#include "srbrcnn/ablation.hpp"
#include "srbrcnn/checkpoint.hpp"
#include "srbrcnn/common.hpp"
#include "srbrcnn/conllu.hpp"
#include "srbrcnn/gradcheck.hpp"
#include "srbrcnn/gradsuite.hpp"
#include "srbrcnn/instances.hpp"
#include "srbrcnn/labels.hpp"
#include "srbrcnn/layers.hpp"
#include "srbrcnn/metrics.hpp"
#include "srbrcnn/model.hpp"
#include "srbrcnn/rng.hpp"
#include "srbrcnn/sdp.hpp"
#include "srbrcnn/tape.hpp"
#include "srbrcnn/tensor.hpp"
#include "srbrcnn/trainer.hpp"
