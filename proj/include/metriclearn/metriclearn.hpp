#pragma once

#include "metriclearn/experiment.hpp"
#include "metriclearn/io.hpp"
#include "metriclearn/linops.hpp"
#include "metriclearn/model.hpp"
#include "metriclearn/optim.hpp"
#include "metriclearn/recover.hpp"
#include "metriclearn/rng.hpp"
#include "metriclearn/synth.hpp"
#include "metriclearn/theory.hpp"
#include "metriclearn/triplet.hpp"
#include "metriclearn/types.hpp"
