#pragma once

#include "hfn/autodiff.hpp"
#include "hfn/config.hpp"
#include "hfn/core.hpp"
#include "hfn/dataset.hpp"
#include "hfn/decision_net.hpp"
#include "hfn/evaluation.hpp"
#include "hfn/extractors.hpp"
#include "hfn/io.hpp"
#include "hfn/metrics.hpp"
#include "hfn/model.hpp"
#include "hfn/params.hpp"
#include "hfn/pipeline.hpp"
#include "hfn/signal.hpp"
#include "hfn/temporal.hpp"
#include "hfn/text_encoder.hpp"
#include "hfn/training.hpp"
#include "hfn/wmff.hpp"
