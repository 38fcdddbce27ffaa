#pragma once

#include "tnfcm/checkpoint.hpp"
#include "tnfcm/common.hpp"
#include "tnfcm/corpus.hpp"
#include "tnfcm/encoder.hpp"
#include "tnfcm/evaluator.hpp"
#include "tnfcm/losses.hpp"
#include "tnfcm/model.hpp"
#include "tnfcm/objective.hpp"
#include "tnfcm/optimizer.hpp"
#include "tnfcm/random.hpp"
#include "tnfcm/relations.hpp"
#include "tnfcm/sampling.hpp"
#include "tnfcm/scoring.hpp"
#include "tnfcm/synthetic.hpp"
#include "tnfcm/trainer.hpp"
