#pragma once

#include "hedgeval/bench.hpp"
#include "hedgeval/coco_io.hpp"
#include "hedgeval/dataset.hpp"
#include "hedgeval/error.hpp"
#include "hedgeval/evaluate.hpp"
#include "hedgeval/hedging.hpp"
#include "hedgeval/ids.hpp"
#include "hedgeval/lrp.hpp"
#include "hedgeval/mask.hpp"
#include "hedgeval/matching.hpp"
#include "hedgeval/nms.hpp"
#include "hedgeval/parallel.hpp"
#include "hedgeval/pr_metrics.hpp"
#include "hedgeval/rle.hpp"
#include "hedgeval/synth.hpp"
#include "hedgeval/version.hpp"
