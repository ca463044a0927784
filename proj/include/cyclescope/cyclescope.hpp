#pragma once

// Bad-cycle detection for agent execution trajectories: span model, DAG and
// call-stack views, structural and semantic detectors, the hybrid pipeline,
// a seeded synthetic corpus generator and an evaluation harness.
// The HTTP embedding provider lives in remote.hpp and is pulled in only by
// targets that need it.

#include "cyclescope/detection.hpp"
#include "cyclescope/embedding.hpp"
#include "cyclescope/errors.hpp"
#include "cyclescope/generator.hpp"
#include "cyclescope/graph.hpp"
#include "cyclescope/hybrid.hpp"
#include "cyclescope/io.hpp"
#include "cyclescope/metrics.hpp"
#include "cyclescope/pipeline.hpp"
#include "cyclescope/rng.hpp"
#include "cyclescope/semantic.hpp"
#include "cyclescope/structural.hpp"
#include "cyclescope/trace.hpp"
